//! Closed-form main terms of the mollified second moment.
//!
//! Two families of constants are computed here, both exactly (polynomial
//! coefficient arithmetic and closed-form ∫ sⁿe^{cs} ds integrals; no
//! quadrature on any production path):
//!
//! * [`c_alpha_beta`] — the shifted diagonal main term
//!   c(α,β) = 1 + (1/ν)·[(1−T^{−2(α+β)})/((α+β)ln T)]·
//!   d²/dxdy [M^{−βx−αy} ∫₀¹P(x+u)P(y+u)du]|_{x=y=0} with M = T^ν,
//!   through the symbolic mixed derivative; [`c_alpha_beta_integral`] is the
//!   equivalent product-integral form
//!   ∫₀¹ (P′(u) − α ln M·P(u))(P′(u) − β ln M·P(u)) du on an independent
//!   code path (complex polynomial convolution), kept separate so the two
//!   can be checked against each other to 1e−12.
//! * [`c_pq`] — the mollified-moment main term
//!   c(P,Q,r,ξ) = 1 + (1/ξ)∫₀¹∫₀¹ e^{2rs}[rξQ(s)P(u) + ξQ′(s)P(u) +
//!   Q(s)P′(u)]² du ds, with the bracket expanded symbolically and the
//!   double integral separated into (u-moment)·(s-exponential-moment)
//!   products.
//!
//! The α+β → 0 limit of c(α,β) replaces the prefactor by its analytic limit
//! 2/ln T·(ln T) ⇒ 2, selected by an explicit flag rather than an epsilon
//! test; without the flag, α+β = 0 is refused as [`Error::DegenerateShift`].

use num_complex::Complex64;

use crate::forms::ShiftPair;
use crate::{Error, Result};

type C64 = Complex64;

/// Tolerance for the coefficient-level normalization checks P(0) = 0,
/// P(1) = 1, Q(0) = 1 (construction paths normalize in one division, so
/// anything beyond a few ulps indicates a genuinely wrong polynomial).
const NORMALIZATION_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Polynomials
// ---------------------------------------------------------------------------

/// A real polynomial in ascending-degree coefficient order. Evaluation,
/// differentiation, products and ∫₀¹ are exact coefficient arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    /// coefficients\[k\] multiplies x^k.
    pub coefficients: Vec<f64>,
}

impl Polynomial {
    /// Wrap ascending coefficients; an empty vector is the zero polynomial.
    pub fn new(coefficients: Vec<f64>) -> Self {
        Polynomial { coefficients }
    }

    /// The identity polynomial P(x) = x.
    pub fn x() -> Self {
        Polynomial::new(vec![0.0, 1.0])
    }

    /// Degree ignoring trailing zero coefficients (zero polynomial → 0).
    pub fn degree(&self) -> usize {
        self.coefficients
            .iter()
            .rposition(|&c| c != 0.0)
            .unwrap_or(0)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Derivative polynomial.
    pub fn derivative(&self) -> Polynomial {
        if self.coefficients.len() <= 1 {
            return Polynomial::new(Vec::new());
        }
        Polynomial::new(
            self.coefficients[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| (i + 1) as f64 * c)
                .collect(),
        )
    }

    /// Coefficient-level product.
    pub fn product(&self, other: &Polynomial) -> Polynomial {
        if self.coefficients.is_empty() || other.coefficients.is_empty() {
            return Polynomial::new(Vec::new());
        }
        let mut out = vec![0.0; self.coefficients.len() + other.coefficients.len() - 1];
        for (i, &a) in self.coefficients.iter().enumerate() {
            for (j, &b) in other.coefficients.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    /// ∫₀¹ p(x) dx = Σ c_k/(k+1).
    pub fn integral_unit(&self) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, &c)| c / (k + 1) as f64)
            .sum()
    }
}

/// a·x + y, coefficientwise.
fn axpy(a: f64, x: &Polynomial, y: &Polynomial) -> Polynomial {
    let n = x.coefficients.len().max(y.coefficients.len());
    let mut out = vec![0.0; n];
    for (k, slot) in out.iter_mut().enumerate() {
        let xv = x.coefficients.get(k).copied().unwrap_or(0.0);
        let yv = y.coefficients.get(k).copied().unwrap_or(0.0);
        *slot = a * xv + yv;
    }
    Polynomial::new(out)
}

// ---------------------------------------------------------------------------
// Exponential moments ∫₀¹ sⁿ e^{cs} ds
// ---------------------------------------------------------------------------

/// ∫₀¹ sⁿe^{cs} ds for n = 0..=n_max.
///
/// For c ≥ 0 the series Iₙ = Σ_{k≥0} c^k/(k!(n+k+1)) has only positive
/// terms — no cancellation at any magnitude. For c < 0 the alternating
/// series and the upward recurrence both lose precision, so the values come
/// from the downward recurrence I_{n−1} = (e^c − c·Iₙ)/n seeded high above
/// n_max (seed error shrinks by |c|/n per step).
fn exp_moments(c: f64, n_max: usize) -> Vec<f64> {
    if c >= 0.0 {
        (0..=n_max)
            .map(|n| {
                let nf = n as f64;
                let mut pw = 1.0; // c^k/k!
                let mut sum = 1.0 / (nf + 1.0);
                let mut k = 1.0;
                loop {
                    pw *= c / k;
                    let t = pw / (nf + k + 1.0);
                    sum += t;
                    if t.abs() < sum.abs() * 1e-17 + 1e-300 {
                        break;
                    }
                    k += 1.0;
                }
                sum
            })
            .collect()
    } else {
        let start = n_max + 40 + 2 * (-c).ceil() as usize;
        let ec = c.exp();
        // Seed: ∫ sⁿe^{cs} ≈ e^c/(n+1+c) for n ≫ |c| (mass near s = 1).
        let mut high = ec / (start as f64 + 1.0 + c);
        let mut vals = vec![0.0; n_max + 1];
        for n in (1..=start).rev() {
            let lower = (ec - c * high) / n as f64;
            if n - 1 <= n_max {
                vals[n - 1] = lower;
            }
            high = lower;
        }
        vals
    }
}

/// ∫₀¹ p(s)·e^{cs} ds in closed form via [`exp_moments`].
pub(crate) fn poly_exp_integral(p: &Polynomial, c: f64) -> f64 {
    if p.coefficients.is_empty() {
        return 0.0;
    }
    let moments = exp_moments(c, p.coefficients.len() - 1);
    p.coefficients
        .iter()
        .zip(&moments)
        .map(|(&a, &m)| a * m)
        .sum()
}

// ---------------------------------------------------------------------------
// Mollifier specification
// ---------------------------------------------------------------------------

/// The mollifier's shape parameters: length exponent ν (M = T^ν), the
/// smoothing polynomial P with P(0) = 0 and P(1) = 1, and the R in
/// σ₀ = 1/2 − R/ln T.
#[derive(Debug, Clone)]
pub struct MollifierSpec {
    /// Length exponent, 0 < ν < 1.
    pub nu: f64,
    /// Smoothing polynomial, P(0) = 0, P(1) = 1.
    pub p: Polynomial,
    /// The R of σ₀ = 1/2 − R/ln T.
    pub sigma0_r: f64,
}

impl MollifierSpec {
    /// Validate and build. The polynomial constraints are coefficient-level:
    /// the constant term must vanish and the coefficients must sum to 1
    /// (within a few ulps of a normalizing division).
    pub fn new(nu: f64, p: Polynomial, sigma0_r: f64) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mollifier exponent must satisfy 0 < ν < 1, got {nu}"
            )));
        }
        if p.coefficients.first().copied().unwrap_or(0.0) != 0.0 {
            return Err(Error::BadNormalization);
        }
        if (p.eval(1.0) - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::BadNormalization);
        }
        Ok(MollifierSpec { nu, p, sigma0_r })
    }
}

// ---------------------------------------------------------------------------
// c(α, β)
// ---------------------------------------------------------------------------

/// The shared prefactor (1/ν)·(1−T^{−2(α+β)})/((α+β)ln T), or its analytic
/// α+β → 0 limit (1/ν)·2 when `limit_form` is set.
fn shift_prefactor(nu: f64, shifts: ShiftPair, t: f64, limit_form: bool) -> Result<C64> {
    if t <= std::f64::consts::E {
        return Err(Error::InvalidParameter(format!(
            "main-term scale must exceed e, got T = {t}"
        )));
    }
    let sum = shifts.alpha + shifts.beta;
    if limit_form {
        return Ok(C64::new(2.0 / nu, 0.0));
    }
    if sum == C64::new(0.0, 0.0) {
        return Err(Error::DegenerateShift);
    }
    let ln_t = t.ln();
    Ok((C64::new(1.0, 0.0) - (-2.0 * sum * ln_t).exp()) / (sum * ln_t) / nu)
}

/// c(α,β) by the symbolic mixed derivative: with a = −β, b = −α and
/// m = ln M = ν ln T,
/// d²/dxdy[M^{ax+by}∫P(x+u)P(y+u)du]|₀ =
/// ab·m²·∫P² + (a+b)·m·∫PP′ + ∫P′², assembled from the real moment
/// integrals of P. Returns 1 + prefactor·(that derivative).
pub fn c_alpha_beta(
    spec: &MollifierSpec,
    shifts: ShiftPair,
    t: f64,
    limit_form: bool,
) -> Result<C64> {
    let pre = shift_prefactor(spec.nu, shifts, t, limit_form)?;
    let m = spec.nu * t.ln();
    let dp = spec.p.derivative();
    let i_pp = spec.p.product(&spec.p).integral_unit();
    let i_pdp = spec.p.product(&dp).integral_unit();
    let i_dpdp = dp.product(&dp).integral_unit();
    let a = -shifts.beta;
    let b = -shifts.alpha;
    let mixed = a * b * m * m * i_pp + (a + b) * m * i_pdp + i_dpdp;
    Ok(C64::new(1.0, 0.0) + pre * mixed)
}

/// c(α,β) by the product-integral form: the same mixed derivative equals
/// ∫₀¹ (P′(u) − α·m·P(u))(P′(u) − β·m·P(u)) du with m = ln M, evaluated by
/// complex coefficient convolution and termwise integration — an
/// independent code path used to cross-check [`c_alpha_beta`] to 1e−12.
pub fn c_alpha_beta_integral(
    spec: &MollifierSpec,
    shifts: ShiftPair,
    t: f64,
    limit_form: bool,
) -> Result<C64> {
    let pre = shift_prefactor(spec.nu, shifts, t, limit_form)?;
    let m = spec.nu * t.ln();
    let dp = spec.p.derivative();
    let n = spec.p.coefficients.len().max(dp.coefficients.len());
    let factor = |shift: C64| -> Vec<C64> {
        (0..n)
            .map(|k| {
                let d = dp.coefficients.get(k).copied().unwrap_or(0.0);
                let p = spec.p.coefficients.get(k).copied().unwrap_or(0.0);
                C64::new(d, 0.0) - shift * m * p
            })
            .collect()
    };
    let fa = factor(shifts.alpha);
    let fb = factor(shifts.beta);
    let mut conv = vec![C64::new(0.0, 0.0); 2 * n - 1];
    for (i, &ca) in fa.iter().enumerate() {
        for (j, &cb) in fb.iter().enumerate() {
            conv[i + j] += ca * cb;
        }
    }
    let mixed: C64 = conv
        .iter()
        .enumerate()
        .map(|(k, &c)| c / (k + 1) as f64)
        .sum();
    Ok(C64::new(1.0, 0.0) + pre * mixed)
}

// ---------------------------------------------------------------------------
// c(P, Q, r, ξ)
// ---------------------------------------------------------------------------

/// The mollified-moment main term
/// c(P,Q,r,ξ) = 1 + (1/ξ)∫₀¹∫₀¹ e^{2rs}[rξQ(s)P(u) + ξQ′(s)P(u) +
/// Q(s)P′(u)]² du ds.
///
/// The bracket is ξP(u)G(s) + P′(u)Q(s) with G = rQ + Q′, so the double
/// integral separates:
/// ξ²·∫P²·E[G²] + 2ξ·∫PP′·E[GQ] + ∫P′²·E[Q²], E[H] = ∫₀¹e^{2rs}H(s)ds,
/// all in closed form. Requires ξ > 0, P(0) = 0, P(1) = 1, Q(0) = 1
/// (`BadNormalization`). The result is ≥ 1: the integrand is a square.
pub fn c_pq(p: &Polynomial, q: &Polynomial, r: f64, xi: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normalization scale must be positive, got ξ = {xi}"
        )));
    }
    if p.eval(0.0).abs() > NORMALIZATION_TOL
        || (p.eval(1.0) - 1.0).abs() > NORMALIZATION_TOL
        || (q.eval(0.0) - 1.0).abs() > NORMALIZATION_TOL
    {
        return Err(Error::BadNormalization);
    }
    let dp = p.derivative();
    let g = axpy(r, q, &q.derivative());
    let i_pp = p.product(p).integral_unit();
    let i_pdp = p.product(&dp).integral_unit();
    let i_dpdp = dp.product(&dp).integral_unit();
    let e_gg = poly_exp_integral(&g.product(&g), 2.0 * r);
    let e_gq = poly_exp_integral(&g.product(q), 2.0 * r);
    let e_qq = poly_exp_integral(&q.product(q), 2.0 * r);
    Ok(1.0 + xi * i_pp * e_gg + 2.0 * i_pdp * e_gq + i_dpdp * e_qq / xi)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
