//! Scalar special functions and shared constants.
//!
//! * [`log_gamma`] — principal-branch ln Γ(z) (shifted Stirling–Bernoulli
//!   series plus reflection), relative error ≲ 1e−14 for |z| ≤ 10⁶;
//! * [`zeta`], [`zeta_n`] — ζ(s) and the level-deflated
//!   ζ^{(N)}(s) = ζ(s)·∏_{p|N}(1 − p^{−s}) by Euler–Maclaurin summation,
//!   absolute error ≲ 1e−13 for Re s ≥ 1/2, |Im s| ≤ 10³;
//! * [`Constants`] — γ, ζ(2), ζ′(2)/ζ(2);
//! * [`stirling_ratio_check`] — measured deviations of the completed-factor
//!   ratios X_{α,β,t} and g_{α,β}(s,t) from their large-t power-law forms.
//!
//! Everything is double precision and pure; all functions are safe for
//! concurrent use.

use num_complex::Complex64;

use crate::forms::{prime_factors, ModularForm, ShiftPair};
use crate::{Error, Result};

type C64 = Complex64;

/// Analytic constants used by the moment formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Euler–Mascheroni constant γ.
    pub euler_gamma: f64,
    /// ζ(2) = π²/6.
    pub zeta2: f64,
    /// ζ′(2)/ζ(2).
    pub zeta2_logderiv: f64,
}

impl Constants {
    /// The standard double-precision values.
    ///
    /// `zeta2` is written as π²/6 so it agrees with that expression to the
    /// last bit; the other two are correctly rounded literals (25-digit
    /// references: γ = 0.5772156649015328606065121…,
    /// ζ′(2)/ζ(2) = −0.5699609930945328063998644…).
    pub fn standard() -> Self {
        Constants {
            euler_gamma: 0.5772156649015328606,
            zeta2: std::f64::consts::PI * std::f64::consts::PI / 6.0,
            zeta2_logderiv: -0.5699609930945328064,
        }
    }

    /// ζ′(2) itself (= `zeta2_logderiv · zeta2`), used by the
    /// symmetric-square derivative identity.
    pub fn zeta2_deriv(&self) -> f64 {
        self.zeta2_logderiv * self.zeta2
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::standard()
    }
}

// ---------------------------------------------------------------------------
// log-gamma
// ---------------------------------------------------------------------------

/// Stirling-series coefficients B_{2k} / (2k(2k−1)) for k = 1..=12.
const STIRLING_COEFFS: [f64; 12] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43_867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
    77_683.0 / 5796.0,
    -236_364_091.0 / 1_506_960.0,
];

/// Re z threshold beyond which the Stirling series with 12 Bernoulli terms
/// is accurate to ~3e−21 relative; smaller arguments are shifted up by the
/// recurrence ln Γ(z) = ln Γ(z+1) − ln z.
const STIRLING_SHIFT: f64 = 9.0;

const LN_PI: f64 = 1.1447298858494001741; // ln π
const HALF_LN_TWO_PI: f64 = 0.91893853320467274178; // ln(2π)/2

/// Principal branch of ln Γ(z).
///
/// The principal branch is the analytic continuation from the positive real
/// axis, i.e. the imaginary part is continuous along any path avoiding the
/// poles rather than reduced mod 2π (so e.g. Im ln Γ(6+3i) ≈ 5.2545 > π).
/// Relative error ≲ 1e−14 for |z| ≤ 10⁶.
pub fn log_gamma(z: C64) -> Result<C64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.floor() {
        return Err(Error::PoleAtNonpositiveInteger);
    }
    Ok(log_gamma_raw(z))
}

/// `log_gamma` without the pole check, for internal hot loops whose
/// arguments are known to stay off the non-positive integers.
pub(crate) fn log_gamma_raw(z: C64) -> C64 {
    if z.re < 0.5 {
        // Reflection ln Γ(z) = ln π − ln sin(πz) − ln Γ(1−z), with the branch
        // of ln sin chosen so the left side is the principal continuation
        // (on the negative real axis this matches the Im → 0⁺ limit).
        LN_PI - log_sin_pi(z) - log_gamma_raw(C64::new(1.0, 0.0) - z)
    } else {
        // Shift into the Stirling region. Each factor z+j has Re > 0, where
        // the recurrence holds with principal logarithms.
        let mut shift = C64::new(0.0, 0.0);
        let mut w = z;
        while w.re < STIRLING_SHIFT {
            shift += w.ln();
            w += 1.0;
        }
        stirling_series(w) - shift
    }
}

/// Stirling–Bernoulli asymptotic series, valid for Re w ≥ `STIRLING_SHIFT`.
fn stirling_series(w: C64) -> C64 {
    let t = w.inv();
    let u = t * t;
    let mut s = C64::new(STIRLING_COEFFS[11], 0.0);
    for k in (0..11).rev() {
        s = s * u + STIRLING_COEFFS[k];
    }
    (w - 0.5) * w.ln() - w + HALF_LN_TWO_PI + t * s
}

/// ln sin(πz) on the branch that makes the gamma reflection formula return
/// the principal ln Γ.
///
/// For Im z ≥ 0 this is ln(i/2) − iπz + Ln(1 − e^{2πiz}) (the exponential has
/// modulus < 1 there, so the last logarithm is principal without crossing its
/// cut); for Im z < 0 it is the conjugate of the value at z̄. On the real
/// axis this realizes the Im → 0⁺ limit.
fn log_sin_pi(z: C64) -> C64 {
    if z.im >= 0.0 {
        let w = (C64::new(0.0, 2.0 * std::f64::consts::PI) * z).exp();
        C64::new(-std::f64::consts::LN_2, std::f64::consts::FRAC_PI_2)
            - C64::new(0.0, std::f64::consts::PI) * z
            + (C64::new(1.0, 0.0) - w).ln()
    } else {
        log_sin_pi(z.conj()).conj()
    }
}

// ---------------------------------------------------------------------------
// zeta
// ---------------------------------------------------------------------------

/// Euler–Maclaurin coefficients B_{2k} / (2k)! for k = 1..=12.
const EM_COEFFS: [f64; 12] = [
    8.3333333333333333e-2,   // 1/12
    -1.3888888888888889e-3,  // -1/720
    3.3068783068783069e-5,   // 1/30240
    -8.2671957671957672e-7,  // -1/1209600
    2.0876756987868099e-8,   // 1/47900160
    -5.2841901386874932e-10, // -691/1307674368000
    1.3382536530684679e-11,  // 1/74724249600
    -3.3896802963225829e-13, // -3617/10670622842880000
    8.5860620562778446e-15,  // 43867/5109094217170944000
    -2.1748686985580619e-16, // -174611/802857662698291200000
    5.5090028283602295e-18,  // 854513/155112100433309859840000
    -1.3954464685812523e-19, // -236364091/1693824136731743669452800000
];

/// Riemann ζ(s) by Euler–Maclaurin summation.
///
/// The truncation point M = max(16, ⌈0.8·|Im s|⌉ + 8) keeps the k-th
/// correction term shrinking by ≈ (|s|/2πM)² ≤ 0.04 per order, so 12 orders
/// reach ≲ 1e−15 absolute for Re s ≥ 1/2, |Im s| ≤ 10³ (and the formula
/// remains a valid continuation for Re s > −20 at this depth).
pub fn zeta(s: C64) -> Result<C64> {
    if s == C64::new(1.0, 0.0) {
        return Err(Error::PoleAtOne);
    }
    let m = 16usize.max((0.8 * s.im.abs()).ceil() as usize + 8);
    let mf = m as f64;

    // Partial sum Σ_{n<M} n^{−s}, compensated.
    let mut sum = C64::new(0.0, 0.0);
    let mut comp = C64::new(0.0, 0.0);
    for n in 1..m {
        let term = (-s * (n as f64).ln()).exp();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }

    let m_pow = (-s * mf.ln()).exp(); // M^{−s}
    let mut total = sum + m_pow * mf / (s - 1.0) + m_pow * 0.5;

    // Σ_k B_{2k}/(2k)! · s(s+1)…(s+2k−2) · M^{−s−2k+1}
    let mut rising = s; // (s)_{2k−1}, starting at k = 1
    let mut m_fac = m_pow / mf; // M^{−s−2k+1}, starting at k = 1
    let inv_m2 = 1.0 / (mf * mf);
    for (k, &c) in EM_COEFFS.iter().enumerate() {
        total += rising * m_fac * c;
        let j = (2 * k + 1) as f64;
        rising = rising * (s + j) * (s + j + 1.0);
        m_fac *= inv_m2;
    }
    Ok(total)
}

/// Level-deflated zeta  ζ^{(N)}(s) = ζ(s) · ∏_{p|N} (1 − p^{−s}).
pub fn zeta_n(s: C64, level: u64) -> Result<C64> {
    let mut v = zeta(s)?;
    for p in prime_factors(level) {
        v *= C64::new(1.0, 0.0) - (-s * (p as f64).ln()).exp();
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Stirling-rate check
// ---------------------------------------------------------------------------

/// Interior point at which the g-ratio deviation is sampled: far enough from
/// s = 0 (where g ≡ 1 exactly) for the deviation to be visible, small enough
/// to stay in the kernel's working region.
const G_CHECK_POINT: C64 = C64::new(0.75, 0.5);

/// Relative deviations of the exact completed-factor ratios from their
/// large-t power-law approximations, at the given shifts and height.
///
/// Returns `(x_dev, g_dev)`:
///
/// * `x_dev` — |X_{α,β,t} / X_st − 1| with the first-order form
///   X_st = (t√N/2π)^{−2(α+β)}·(1 + i(α²−β²)/t); decays like 1/t².
/// * `g_dev` — |g_{α,β}(s₀,t) / (t√N/2π)^{2s₀} − 1| at the fixed interior
///   point s₀ = 0.75 + 0.5i; decays like |s₀|²/t.
///
/// Panics are impossible for t ≥ 10 (no gamma pole can be reached there);
/// the t ≥ 10 precondition is debug-asserted.
pub fn stirling_ratio_check(form: &ModularForm, shifts: ShiftPair, t: f64) -> (f64, f64) {
    debug_assert!(t >= 10.0, "stirling_ratio_check needs t >= 10");
    let scale = (t * (form.level as f64).sqrt() / (2.0 * std::f64::consts::PI)).ln();
    let a = shifts.alpha;
    let b = shifts.beta;

    let x_exact = crate::lfunc::x_factor(form, shifts, t)
        .expect("no gamma pole at t >= 10");
    let x_stirling = (-2.0 * (a + b) * scale).exp()
        * (C64::new(1.0, 0.0) + C64::new(0.0, 1.0) * (a * a - b * b) / t);
    let x_dev = (x_exact / x_stirling - 1.0).norm();

    let g_exact = crate::lfunc::g_ratio(form, shifts, G_CHECK_POINT, t)
        .expect("no gamma pole at t >= 10");
    let g_stirling = (2.0 * G_CHECK_POINT * scale).exp();
    let g_dev = (g_exact / g_stirling - 1.0).norm();

    (x_dev, g_dev)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-13;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn log_gamma_at_one_and_half() {
        // The recurrence route computes ln Γ(1) as ln Γ(10) minus nine log
        // terms of size up to ~10.6, so the zero is exact only to about one
        // ulp of those intermediates (≈ 2e−15), not to one ulp of 0.
        let g1 = log_gamma(c(1.0, 0.0)).unwrap();
        assert!(g1.norm() < 4e-15, "ln Γ(1) = 0, got {g1}");
        let gh = log_gamma(c(0.5, 0.0)).unwrap();
        let expect = std::f64::consts::PI.sqrt().ln();
        assert!((gh.re - expect).abs() < 4e-15 && gh.im == 0.0);
    }

    #[test]
    fn log_gamma_rejects_poles() {
        for re in [0.0, -1.0, -2.0, -17.0] {
            assert_eq!(log_gamma(c(re, 0.0)), Err(Error::PoleAtNonpositiveInteger));
        }
        // Nearby non-integer points are fine.
        assert!(log_gamma(c(-1.0 + 1e-6, 0.0)).is_ok());
        assert!(log_gamma(c(-1.0, 1e-9)).is_ok());
    }

    #[test]
    fn log_gamma_factorials() {
        // Γ(n+1) = n!
        let mut fact = 1.0f64;
        for n in 2..=20 {
            fact *= n as f64 - 1.0;
            let got = log_gamma(c(n as f64, 0.0)).unwrap();
            assert!(
                (got.re - fact.ln()).abs() < TOL * fact.ln().abs().max(1.0),
                "ln Γ({n}) off: {} vs {}",
                got.re,
                fact.ln()
            );
            assert_eq!(got.im, 0.0);
        }
    }

    #[test]
    fn log_gamma_conjugate_symmetry() {
        for &z in &[c(3.2, 4.1), c(0.3, 7.0), c(-2.5, 3.0), c(11.0, -0.7)] {
            let a = log_gamma(z).unwrap();
            let b = log_gamma(z.conj()).unwrap();
            assert!((a - b.conj()).norm() < 1e-13 * a.norm().max(1.0));
        }
    }

    #[test]
    fn log_gamma_recurrence() {
        // ln Γ(z+1) − ln Γ(z) = ln z (principal, Re z > 0).
        for &z in &[c(0.7, 0.2), c(4.5, -3.0), c(8.9, 100.0)] {
            let lhs = log_gamma(z + 1.0).unwrap() - log_gamma(z).unwrap();
            assert!((lhs - z.ln()).norm() < 1e-13 * z.ln().norm().max(1.0));
        }
    }

    #[test]
    fn log_gamma_reflection_mod_2pi() {
        // ln Γ(z) + ln Γ(1−z) ≡ ln(π / sin πz) (mod 2πi).
        for &z in &[c(0.3, 0.4), c(-1.2, 2.0), c(2.6, -1.5), c(0.5, 6.0)] {
            let lhs = log_gamma(z).unwrap() + log_gamma(c(1.0, 0.0) - z).unwrap();
            let sin = (std::f64::consts::PI * z).sin();
            let rhs = c(LN_PI, 0.0) - sin.ln();
            let diff = (lhs - rhs) / (2.0 * std::f64::consts::PI);
            // Imag part of diff/2π must be ~0 mod 1; real part ~0.
            let frac = (diff.im - diff.im.round()).abs();
            assert!(diff.re.abs() < 1e-12 && frac < 1e-12, "z={z}: diff {diff}");
        }
    }

    #[test]
    fn log_gamma_duplication_mod_2pi() {
        // ln Γ(s) + ln Γ(s+1/2) ≡ (1−2s)ln 2 + ln√π + ln Γ(2s) (mod 2πi).
        for &s in &[c(0.8, 0.0), c(1.3, 2.2), c(5.5, -4.0), c(0.6, 30.0)] {
            let lhs = log_gamma(s).unwrap() + log_gamma(s + 0.5).unwrap();
            let rhs = (c(1.0, 0.0) - 2.0 * s) * std::f64::consts::LN_2
                + 0.5 * LN_PI
                + log_gamma(2.0 * s).unwrap();
            let diff = (lhs - rhs) / (2.0 * std::f64::consts::PI);
            let frac = (diff.im - diff.im.round()).abs();
            assert!(diff.re.abs() < 1e-12 && frac < 1e-12, "s={s}: diff {diff}");
        }
    }

    #[test]
    fn zeta_rejects_pole() {
        assert_eq!(zeta(c(1.0, 0.0)), Err(Error::PoleAtOne));
    }

    #[test]
    fn zeta_two_is_pi_squared_over_six() {
        let z = zeta(c(2.0, 0.0)).unwrap();
        let expect = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        assert!((z.re - expect).abs() < 1e-14 && z.im.abs() < 1e-16);
    }

    #[test]
    fn zeta_n_examples() {
        let z = zeta_n(c(2.0, 0.0), 1).unwrap();
        let expect = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        assert!((z.re - expect).abs() < 1e-14, "empty product changes nothing");

        let z6 = zeta_n(c(2.0, 0.0), 6).unwrap();
        let expect6 = (1.0 - 0.25) * (1.0 - 1.0 / 9.0) * expect;
        assert!((z6.re - expect6).abs() < 1e-14);
    }

    #[test]
    fn constants_invariants() {
        let k = Constants::standard();
        assert!((k.zeta2 - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-16);
        assert!(k.euler_gamma > 0.577215 && k.euler_gamma < 0.577216);
    }
}
