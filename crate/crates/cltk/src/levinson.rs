//! Zero-proportion machinery: the closed-form objective built from
//! w(x) = e^{Rx}Q(x), the proportion lower bound 1 − g, and the multistart
//! simplex optimizer that reproduces the tabulated (R, h) rows.
//!
//! The shape polynomial family is Q(x) = 1 + Σₙ hₙ[(1−2x)^{2n−1} − 1]
//! (real coefficients; Q(0) = 1 by construction). With
//! A = ∫₀¹|w|², B = ∫₀¹ w w̄′, C = ∫₀¹|w′|², α = √(C/A) for real Q,
//! the objective is
//!
//!   g(R, h) = (1/R)·ln[ (1 + w(1)²)/2 + √(AC)/tanh((ν/2)·√(C/A)) ]
//!
//! and the zero proportion is bounded below by 1 − g. All integrals are
//! closed-form polynomial × e^{2Rx} moments — no quadrature anywhere.
//!
//! [`optimal_smoothing_polynomial`] realizes the infimum over the mollifier
//! polynomial P of the quadratic functional behind [`c_pq`], by an exact
//! linear solve; its value matches the closed form
//! (1 + w(1)²)/2 + Aα/tanh(ξα), which is how the two routes cross-check
//! each other to 1e−6 and how the proportion bound connects to the
//! mollified moment (r = 2R, ξ = ν/2).

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::mainterm::{c_pq, Polynomial};
use crate::{Error, Result};

type C64 = Complex64;

/// Below this C/A the tanh argument underflows usefully; the term
/// √(AC)/tanh(ξ√(C/A)) is replaced by its analytic limit A/ξ.
const TANH_LIMIT_RATIO: f64 = 1e-20;

/// Feasible box for the optimizer: the objective is +∞ outside
/// R ∈ [0.1, 20], |hₙ| ≤ 8. Every tabulated optimum sits well inside; the
/// cap matters for shapes (such as Q = 1) whose objective keeps improving
/// as R grows and would otherwise drift without converging.
const R_BOX: (f64, f64) = (0.1, 20.0);
const H_BOX: f64 = 8.0;

// ---------------------------------------------------------------------------
// Parameters and functionals
// ---------------------------------------------------------------------------

/// A point of the real optimization family: smoothing scale R > 0, shape
/// coefficients h₁..h_N of Q(x) = 1 + Σ hₙ[(1−2x)^{2n−1} − 1], and the
/// mollifier exponent ν. Tabulated rows use ν ∈ {1/6, 5/27, 1/4}; any
/// ν ∈ (0,1) is accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct LevinsonParams {
    /// Exponential scale in w(x) = e^{Rx}Q(x); must be positive.
    pub r: f64,
    /// Coefficients h₁..h_N (empty array means Q = 1).
    pub h: Vec<f64>,
    /// Mollifier length exponent, 0 < ν < 1.
    pub nu: f64,
}

impl LevinsonParams {
    /// Validate and build.
    pub fn new(r: f64, h: Vec<f64>, nu: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::NonpositiveR);
        }
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mollifier exponent must satisfy 0 < ν < 1, got {nu}"
            )));
        }
        Ok(LevinsonParams { r, h, nu })
    }

    /// Expand Q(x) = 1 + Σₙ hₙ[(1−2x)^{2n−1} − 1] into coefficients.
    /// Q(0) = 1 exactly: each bracket vanishes at x = 0 coefficient-wise.
    pub fn q_polynomial(&self) -> Polynomial {
        let top = if self.h.is_empty() { 0 } else { 2 * self.h.len() - 1 };
        let mut coeffs = vec![0.0; top + 1];
        coeffs[0] = 1.0;
        for (idx, &hn) in self.h.iter().enumerate() {
            let m = 2 * (idx + 1) - 1;
            // (1−2x)^m = Σ_j C(m,j)(−2)^j x^j; the j = 0 term cancels
            // against the −1 of the bracket.
            let mut binom = 1.0;
            let mut pow = 1.0;
            for j in 1..=m {
                binom *= (m - j + 1) as f64 / j as f64;
                pow *= -2.0;
                coeffs[j] += hn * binom * pow;
            }
        }
        Polynomial::new(coeffs)
    }

    /// The same shape in the t = 1−2x variable, where it is sparse and
    /// exactly representable: Q̃(t) = (1 − Σ hₙ) + Σ hₙ t^{2n−1}.
    fn q_shifted(&self) -> Polynomial {
        let top = if self.h.is_empty() { 0 } else { 2 * self.h.len() - 1 };
        let mut coeffs = vec![0.0; top + 1];
        coeffs[0] = 1.0 - self.h.iter().sum::<f64>();
        for (idx, &hn) in self.h.iter().enumerate() {
            coeffs[2 * (idx + 1) - 1] = hn;
        }
        Polynomial::new(coeffs)
    }
}

// ---------------------------------------------------------------------------
// Closed-form moments in the t = 1 − 2x variable
//
// The Q family has huge alternating monomial coefficients (the degree-7 row
// shapes reach ~5·10² in x, ~4·10⁶ after squaring) while staying O(1) in
// t = 1 − 2x, where Q̃(t) = (1 − Σhₙ) + Σ hₙ t^{2n−1}. Summing monomial
// coefficients against e^{2Rx} moments would lose ~8 digits to
// cancellation, so every integral below is evaluated in the t basis:
// ∫₀¹ e^{cx} p(x) dx = (e^{c/2}/2)·Σₙ p̃ₙ·Jₙ(c/2),
// Jₙ(d) = ∫_{−1}^{1} tⁿ e^{−dt} dt — still pure closed form.
// ---------------------------------------------------------------------------

/// Rewrite p(x) in the t = 1 − 2x variable: returns the coefficients of
/// p̃(t) = p((1−t)/2) (Horner with a polynomial argument).
fn to_shifted_basis(p: &Polynomial) -> Polynomial {
    let mut acc: Vec<f64> = Vec::new();
    for &a in p.coefficients.iter().rev() {
        let mut next = vec![0.0; acc.len() + 1];
        for (k, &v) in acc.iter().enumerate() {
            next[k] += v / 2.0;
            next[k + 1] -= v / 2.0;
        }
        if next.is_empty() {
            next.push(0.0);
        }
        next[0] += a;
        acc = next;
    }
    Polynomial::new(acc)
}

/// Jₙ(d) = ∫_{−1}^{1} tⁿe^{−dt} dt for n = 0..=n_max. For |d| ≥ 1/2 this
/// splits over [−1,0] and [0,1] into the one-sided moments
/// (−1)ⁿIₙ(d) + Iₙ(−d) with Iₙ(c) = ∫₀¹sⁿe^{cs}ds; below, the direct
/// series 2·Σ_{k ≡ n (mod 2)} (−d)^k/(k!(n+k+1)) avoids the odd-n
/// cancellation between the two sides.
fn sym_exp_moments(d: f64, n_max: usize) -> Vec<f64> {
    if d.abs() >= 0.5 {
        let plus = unit_exp_moments(d, n_max);
        let minus = unit_exp_moments(-d, n_max);
        (0..=n_max)
            .map(|n| if n % 2 == 0 { plus[n] + minus[n] } else { minus[n] - plus[n] })
            .collect()
    } else {
        (0..=n_max)
            .map(|n| {
                let mut pw = 1.0; // (−d)^k/k!
                let mut sum = if n % 2 == 0 { 2.0 / (n as f64 + 1.0) } else { 0.0 };
                for k in 1..60 {
                    pw *= -d / k as f64;
                    if (n + k) % 2 == 0 {
                        let t = 2.0 * pw / (n + k + 1) as f64;
                        sum += t;
                        if t.abs() < sum.abs() * 1e-17 + 1e-300 {
                            break;
                        }
                    }
                }
                sum
            })
            .collect()
    }
}

/// Iₙ(c) = ∫₀¹ sⁿe^{cs} ds by the positive series (c ≥ 0) or the stable
/// downward recurrence (c < 0) — the same scheme as the main-term module,
/// repeated here on plain vectors.
fn unit_exp_moments(c: f64, n_max: usize) -> Vec<f64> {
    if c >= 0.0 {
        (0..=n_max)
            .map(|n| {
                let nf = n as f64;
                let mut pw = 1.0;
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

/// ∫₀¹ e^{cx} p(x) dx for p given in the t = 1−2x basis.
fn shifted_poly_exp_integral(p_t: &Polynomial, c: f64) -> f64 {
    if p_t.coefficients.is_empty() {
        return 0.0;
    }
    let j = sym_exp_moments(c / 2.0, p_t.coefficients.len() - 1);
    let sum: f64 = p_t
        .coefficients
        .iter()
        .zip(&j)
        .map(|(&a, &m)| a * m)
        .sum();
    (c / 2.0).exp() / 2.0 * sum
}

/// A, B, C and w(1)² for weight e^{2rx} and a shape already expressed in
/// the t basis. G̃ = r·Q̃ − 2·dQ̃/dt is w′/e^{rx} pulled to t (d/dx = −2d/dt).
fn functionals_in_t(q_t: &Polynomial, r: f64) -> (f64, f64, f64, f64) {
    let dq_t = q_t.derivative();
    let n = q_t.coefficients.len().max(dq_t.coefficients.len());
    let mut g_t = vec![0.0; n];
    for (k, slot) in g_t.iter_mut().enumerate() {
        *slot = r * q_t.coefficients.get(k).copied().unwrap_or(0.0)
            - 2.0 * dq_t.coefficients.get(k).copied().unwrap_or(0.0);
    }
    let g_t = Polynomial::new(g_t);
    let c2 = 2.0 * r;
    let a = shifted_poly_exp_integral(&q_t.product(q_t), c2);
    let b = shifted_poly_exp_integral(&q_t.product(&g_t), c2);
    let c = shifted_poly_exp_integral(&g_t.product(&g_t), c2);
    let q1 = q_t.eval(-1.0); // x = 1 is t = −1
    let w1_sq = c2.exp() * q1 * q1;
    (a, b, c, w1_sq)
}

/// The closed-form integrals of w(x) = e^{Rx}Q(x) over [0,1]:
/// A = ∫|w|², B = ∫ w w̄′, C = ∫|w′|², the scale α, and w(1)².
#[derive(Debug, Clone)]
pub struct ConreyFunctionals {
    /// ∫₀¹ |w(x)|² dx > 0.
    pub a: f64,
    /// ∫₀¹ w(x) w̄′(x) dx; real for real Q (and then equals (w(1)²−1)/2).
    pub b: C64,
    /// ∫₀¹ |w′(x)|² dx ≥ 0.
    pub c: f64,
    /// √((B−B̄)² + 4AC)/(2A); reduces to √(C/A) for real Q.
    pub alpha: f64,
    /// w(1)² = e^{2R} Q(1)².
    pub w1_sq: f64,
}

/// Compute the functionals by closed-form polynomial × e^{2Rx} integration:
/// with G = RQ + Q′ (so that w′ = e^{Rx}G), A = E[Q²], B = E[QG],
/// C = E[G²] where E[H] = ∫₀¹ e^{2Rx} H(x) dx — all evaluated in the
/// well-conditioned t = 1−2x basis.
pub fn conrey_functionals(params: &LevinsonParams) -> Result<ConreyFunctionals> {
    if !(params.r > 0.0) {
        return Err(Error::NonpositiveR);
    }
    let (a, b, c, w1_sq) = functionals_in_t(&params.q_shifted(), params.r);
    let b = C64::new(b, 0.0);
    // General-position α; for real B the (B−B̄)² term vanishes and this is
    // √(C/A) up to rounding.
    let disc = ((b - b.conj()).powi(2) + 4.0 * a * c).re;
    let alpha = disc.max(0.0).sqrt() / (2.0 * a);
    Ok(ConreyFunctionals { a, b, c, alpha, w1_sq })
}

// ---------------------------------------------------------------------------
// The objective and the proportion bound
// ---------------------------------------------------------------------------

/// The bracket (1 + w(1)²)/2 + Aα/tanh(ξα) of the closed-form infimum,
/// for w(x) = e^{rx}Q(x) and a free tanh scale ξ. Uses √(AC) = Aα and the
/// ξ-limit A/ξ when C/A underflows.
fn closed_form_bracket(q: &Polynomial, r: f64, xi: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonpositiveR);
    }
    let (a, _, c, w1_sq) = functionals_in_t(&to_shifted_basis(q), r);
    let cross = if c / a < TANH_LIMIT_RATIO {
        a / xi
    } else {
        let alpha = (c / a).sqrt();
        (a * c).sqrt() / (xi * alpha).tanh()
    };
    Ok((1.0 + w1_sq) / 2.0 + cross)
}

/// g(R,h) = (1/R)·ln[(1 + w(1)²)/2 + √(AC)/tanh((ν/2)√(C/A))]; the zero
/// proportion is bounded below by 1 − g. Built on [`conrey_functionals`]
/// (not on the bracket helper — the two stay independent code paths so the
/// reparameterization identity test means something).
pub fn proportion_objective(params: &LevinsonParams) -> Result<f64> {
    let f = conrey_functionals(params)?;
    let xi = params.nu / 2.0;
    let cross = if f.c / f.a < TANH_LIMIT_RATIO {
        f.a / xi
    } else {
        (f.a * f.c).sqrt() / (xi * f.alpha).tanh()
    };
    Ok(((1.0 + f.w1_sq) / 2.0 + cross).ln() / params.r)
}

/// The proportion bound written the other way: 1 − (1/(2R))·ln of the
/// closed-form infimum of the mollified moment c(P, Q, 2R, ν/2) over P.
/// Algebraically identical to `1 − proportion_objective` evaluated at
/// R′ = 2R — asserted as an identity of the two code paths in tests.
pub fn proportion_via_mollified_inf(params: &LevinsonParams) -> Result<f64> {
    let q = params.q_polynomial();
    let bracket = closed_form_bracket(&q, 2.0 * params.r, params.nu / 2.0)?;
    Ok(1.0 - bracket.ln() / (2.0 * params.r))
}

/// ℓ² norm of the central finite-difference gradient of g (step 1e−6) in
/// the (R, h₁..h_N) coordinates — the near-stationarity certificate for
/// tabulated rows.
pub fn objective_gradient_norm(params: &LevinsonParams) -> Result<f64> {
    const STEP: f64 = 1e-6;
    let mut sq = 0.0;
    let dim = params.h.len() + 1;
    for i in 0..dim {
        let mut lo = params.clone();
        let mut hi = params.clone();
        if i == 0 {
            lo.r -= STEP;
            hi.r += STEP;
        } else {
            lo.h[i - 1] -= STEP;
            hi.h[i - 1] += STEP;
        }
        let d = (proportion_objective(&hi)? - proportion_objective(&lo)?) / (2.0 * STEP);
        sq += d * d;
    }
    Ok(sq.sqrt())
}

// ---------------------------------------------------------------------------
// The mollified moment main term and its infimum over P
// ---------------------------------------------------------------------------

/// Main-term value of the averaged mollified square at scale T:
/// c(P, Q, 2R, ν/2), the T-independent limit (T only enters the o(1)).
pub fn mollified_moment_mainterm(
    params: &LevinsonParams,
    p: &Polynomial,
    t: f64,
) -> Result<f64> {
    if t <= std::f64::consts::E {
        return Err(Error::InvalidParameter(format!(
            "moment scale must exceed e, got T = {t}"
        )));
    }
    c_pq(p, &params.q_polynomial(), 2.0 * params.r, params.nu / 2.0)
}

/// Exact minimizer of P ↦ c(P, Q, r, ξ) over polynomials of degree ≤
/// `max_degree` with P(0) = 0, P(1) = 1.
///
/// The functional is a convex quadratic in the free coefficients of
/// P(x) = x + Σ_{k=2}^{d} c_k(x^k − x), so the minimum is one linear solve:
/// the quadratic form is extracted exactly from closed-form evaluations at
/// 0, ±e_k and e_j+e_k (no finite-difference error), then Hc = −grad is
/// solved by Gaussian elimination. Returns (argmin P, min value). The
/// value matches the closed form (1 + w(1)²)/2 + Aα/tanh(ξα) of the
/// unconstrained-degree infimum once the degree is high enough (the true
/// optimizer sinh(ξαx)/sinh(ξα) is entire, so degree 8 is plenty).
pub fn optimal_smoothing_polynomial(
    q: &Polynomial,
    r: f64,
    xi: f64,
    max_degree: usize,
) -> Result<(Polynomial, f64)> {
    if max_degree < 1 {
        return Err(Error::InvalidParameter(
            "smoothing polynomial needs degree ≥ 1".into(),
        ));
    }
    let dim = max_degree.saturating_sub(1);
    let assemble = |c: &[f64]| -> Polynomial {
        // x + Σ c_k(x^{k+2} − x), k = 0..dim
        let mut coeffs = vec![0.0; max_degree + 1];
        coeffs[1] = 1.0 - c.iter().sum::<f64>();
        for (k, &ck) in c.iter().enumerate() {
            coeffs[k + 2] = ck;
        }
        Polynomial::new(coeffs)
    };
    let phi = |c: &[f64]| -> Result<f64> { c_pq(&assemble(c), q, r, xi) };
    if dim == 0 {
        let p = assemble(&[]);
        let v = phi(&[])?;
        return Ok((p, v));
    }
    let zero = vec![0.0; dim];
    let f0 = phi(&zero)?;
    let mut grad = vec![0.0; dim];
    let mut hess = vec![vec![0.0; dim]; dim];
    let mut f_plus = vec![0.0; dim];
    for i in 0..dim {
        let mut e = zero.clone();
        e[i] = 1.0;
        let fp = phi(&e)?;
        e[i] = -1.0;
        let fm = phi(&e)?;
        f_plus[i] = fp;
        grad[i] = (fp - fm) / 2.0;
        hess[i][i] = fp - 2.0 * f0 + fm;
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut e = zero.clone();
            e[i] = 1.0;
            e[j] = 1.0;
            let fij = phi(&e)?;
            let off = fij - f_plus[i] - f_plus[j] + f0;
            hess[i][j] = off;
            hess[j][i] = off;
        }
    }
    let rhs: Vec<f64> = grad.iter().map(|&g| -g).collect();
    let sol = solve_dense(hess, rhs)?;
    let p = assemble(&sol);
    let v = phi(&sol)?;
    Ok((p, v))
}

/// Gaussian elimination with partial pivoting for the small symmetric
/// systems above.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::FitIllConditioned(
                "singular quadratic form in the polynomial minimization".into(),
            ));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in (col + 1)..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// θ ↦ ν in exact rational arithmetic
// ---------------------------------------------------------------------------

/// ν(θ) = (1 − 2θ)/(4 + 2θ) on exact rationals: θ = num/den ↦ reduced
/// (numerator, denominator). ν(7/64) = 5/27 and ν(0) = 1/4 exactly.
pub fn nu_from_theta(theta_num: i64, theta_den: i64) -> Result<(i64, i64)> {
    if theta_den <= 0 {
        return Err(Error::InvalidParameter(
            "θ denominator must be positive".into(),
        ));
    }
    let num = theta_den - 2 * theta_num;
    let den = 4 * theta_den + 2 * theta_num;
    if den == 0 {
        return Err(Error::InvalidParameter("θ = −2 pole of ν(θ)".into()));
    }
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let g = gcd(num, den).max(1);
    let sign = if den < 0 { -1 } else { 1 };
    Ok((sign * num / g, sign * den / g))
}

// ---------------------------------------------------------------------------
// The optimizer
// ---------------------------------------------------------------------------

/// Multistart derivative-free minimization of g over (R, h₁..h_degree):
/// `starts` initial points drawn uniformly from R ∈ [1,12], hₙ ∈ [−4,4]
/// with a fixed-seed ChaCha stream, each polished by Nelder–Mead with
/// shrinking restarts inside the feasible box R ∈ [0.1, 20], |hₙ| ≤ 8
/// (objective +∞ outside; shapes whose objective keeps improving with R,
/// such as Q = 1, converge to the box edge). Deterministic for a fixed
/// seed; ties break to the lowest start index. Returns the best parameters
/// and the proportion bound 1 − g. `degree` = 0 optimizes R alone with
/// Q = 1.
pub fn optimize_proportion(
    nu: f64,
    degree: usize,
    starts: usize,
    seed: u64,
) -> Result<(LevinsonParams, f64)> {
    if starts == 0 {
        return Err(Error::InvalidParameter("need at least one start".into()));
    }
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mollifier exponent must satisfy 0 < ν < 1, got {nu}"
        )));
    }
    let dim = degree + 1;
    let objective = move |x: &[f64]| -> f64 {
        if !(x[0] >= R_BOX.0) || x[0] > R_BOX.1 || x[1..].iter().any(|&h| h.abs() > H_BOX) {
            return f64::INFINITY;
        }
        let params = LevinsonParams {
            r: x[0],
            h: x[1..].to_vec(),
            nu,
        };
        proportion_objective(&params).unwrap_or(f64::INFINITY)
    };

    // One ChaCha stream drives every start so the draw sequence (hence the
    // result) is reproducible; striping across threads only partitions the
    // already-drawn points.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..starts)
        .map(|_| {
            let mut x = Vec::with_capacity(dim);
            x.push(rng.gen_range(1.0..12.0));
            for _ in 0..degree {
                x.push(rng.gen_range(-4.0..4.0));
            }
            x
        })
        .collect();

    let workers = crate::thread_count().min(starts).max(1);
    let mut results: Vec<(usize, Vec<f64>, f64)> = Vec::with_capacity(starts);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for tid in 0..workers {
            let points = &points;
            let objective = &objective;
            handles.push(scope.spawn(move || {
                let mut local = Vec::new();
                for (idx, start) in points.iter().enumerate() {
                    if idx % workers != tid {
                        continue;
                    }
                    let mut best = start.clone();
                    for &scale in &[0.5, 0.05, 1e-3, 1e-5] {
                        let (x, _) = nelder_mead(objective, &best, scale, 4000);
                        best = x;
                    }
                    local.push((idx, best.clone(), objective(&best)));
                }
                local
            }));
        }
        for handle in handles {
            results.extend(handle.join().expect("optimizer worker panicked"));
        }
    });
    // Deterministic reduction: strictly better value wins; on exact ties the
    // lowest start index does.
    results.sort_by(|x, y| x.0.cmp(&y.0));
    let mut best: Option<&(usize, Vec<f64>, f64)> = None;
    for r in &results {
        if best.map_or(true, |b| r.2 < b.2) {
            best = Some(r);
        }
    }
    let (_, x, g) = best.expect("at least one start");
    let params = LevinsonParams {
        r: x[0],
        h: x[1..].to_vec(),
        nu,
    };
    Ok((params, 1.0 - g))
}

/// Standard Nelder–Mead (reflect 1, expand 2, contract 1/2, shrink 1/2)
/// from `x0` with initial simplex offsets `scale`, stopping when the
/// simplex collapses in value (spread ≤ 1e−13) and size (≤ 1e−8) or after
/// `max_iter` reflections. Returns the best vertex.
fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    scale: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += scale;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let size: f64 = (0..n)
            .map(|j| {
                simplex
                    .iter()
                    .map(|(x, _)| (x[j] - simplex[0].0[j]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() <= 1e-13 * (1.0 + simplex[0].1.abs()) && size <= 1e-8 {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let at = |t: f64| -> Vec<f64> {
            (0..n)
                .map(|j| centroid[j] + t * (worst.0[j] - centroid[j]))
                .collect()
        };
        let refl = at(-1.0);
        let f_refl = f(&refl);
        if f_refl < simplex[0].1 {
            let exp = at(-2.0);
            let f_exp = f(&exp);
            simplex[n] = if f_exp < f_refl { (exp, f_exp) } else { (refl, f_refl) };
        } else if f_refl < simplex[n - 1].1 {
            simplex[n] = (refl, f_refl);
        } else {
            let (cand, f_cand) = if f_refl < worst.1 {
                let c = at(-0.5);
                let fc = f(&c);
                (c, fc)
            } else {
                let c = at(0.5);
                let fc = f(&c);
                (c, fc)
            };
            if f_cand < worst.1.min(f_refl) {
                simplex[n] = (cand, f_cand);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    for j in 0..n {
                        v.0[j] = best[j] + 0.5 * (v.0[j] - best[j]);
                    }
                    v.1 = f(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    /// Tabulated optimizer rows and the reference proportions they produce.
    /// References computed with mpmath at 30 significant digits from the
    /// same closed-form objective (independent implementation); they
    /// floor-truncate to the published 4-decimal percentages.
    const ROWS: [(f64, f64, [f64; 4], f64); 3] = [
        (
            1.0 / 6.0,
            6.6838894702116801322,
            [
                1.6017785744634898860,
                -3.0362512753510924917,
                3.0757757634512927939,
                -1.1407980564855935531,
            ],
            0.0165334465959,
        ),
        (
            5.0 / 27.0,
            6.4278834168344993342,
            [
                1.5898336242677838745,
                -2.9899828229132398066,
                3.0171733454035522056,
                -1.1164150244992046552,
            ],
            0.0297636650057,
        ),
        (
            0.25,
            5.6503610091685135131,
            [
                1.5369390514358411982,
                -2.7929104872905007806,
                2.7758193765120241770,
                -1.0187870607687957034,
            ],
            0.0693905955909,
        ),
    ];

    fn tabulated(i: usize) -> LevinsonParams {
        let (nu, r, h, _) = ROWS[i];
        LevinsonParams::new(r, h.to_vec(), nu).unwrap()
    }

    #[test]
    fn q_polynomial_expansion() {
        // h = (0.5): Q = 1 + 0.5[(1−2x) − 1] = 1 − x.
        let p = LevinsonParams::new(1.0, vec![0.5], 0.25).unwrap();
        assert_eq!(p.q_polynomial().coefficients, vec![1.0, -1.0]);
        // h = (0, 1): Q = (1−2x)³ = 1 − 6x + 12x² − 8x³.
        let p = LevinsonParams::new(1.0, vec![0.0, 1.0], 0.25).unwrap();
        assert_eq!(p.q_polynomial().coefficients, vec![1.0, -6.0, 12.0, -8.0]);
        // Q(0) = 1 exactly for arbitrary h.
        let p = LevinsonParams::new(1.0, vec![1.7, -2.3, 0.9, -0.4], 0.25).unwrap();
        assert_eq!(p.q_polynomial().coefficients[0], 1.0);
        assert_eq!(p.q_polynomial().degree(), 7);
    }

    #[test]
    fn functionals_for_unit_q() {
        // w = e^x: A = C = (e²−1)/2, B = (e²−1)/2, w(1)² = e², α = 1.
        let f = conrey_functionals(&LevinsonParams::new(1.0, vec![], 0.25).unwrap()).unwrap();
        let half = (std::f64::consts::E.powi(2) - 1.0) / 2.0;
        assert!((f.a - half).abs() < 1e-14);
        assert!((f.c - half).abs() < 1e-14);
        assert!((f.b.re - half).abs() < 1e-14);
        assert_eq!(f.b.im, 0.0);
        assert!((f.w1_sq - std::f64::consts::E.powi(2)).abs() < 1e-13);
        assert!((f.alpha - 1.0).abs() < 1e-14);
    }

    #[test]
    fn functionals_shrink_with_r() {
        // Q = 1, R → 0⁺: A → 1, C = R²A → 0, α = R.
        let f =
            conrey_functionals(&LevinsonParams::new(1e-8, vec![], 0.25).unwrap()).unwrap();
        assert!((f.a - 1.0).abs() < 1e-7);
        assert!((f.alpha - 1e-8).abs() < 1e-20);
        assert!(f.c < 1e-15);
        assert!(matches!(
            conrey_functionals(&LevinsonParams { r: -1.0, h: vec![], nu: 0.25 }),
            Err(Error::NonpositiveR)
        ));
    }

    #[test]
    fn b_is_an_endpoint_difference_for_real_q() {
        // ∫ww′ = (w(1)² − w(0)²)/2 with w(0) = Q(0) = 1; the left side is
        // a closed-form exponential moment, the right side two evaluations.
        // At the tabulated rows w is engineered to be tiny against e^{2R},
        // so the moment side carries an intrinsic absolute error of order
        // e^{2R}·ulp — the tolerance scales with that.
        for i in 0..3 {
            let params = tabulated(i);
            let f = conrey_functionals(&params).unwrap();
            assert!(
                (f.b.re - (f.w1_sq - 1.0) / 2.0).abs() <= 1e-13 * (2.0 * params.r).exp(),
                "row {i}: B = {} vs endpoint form {}",
                f.b.re,
                (f.w1_sq - 1.0) / 2.0
            );
            assert_eq!(f.b.im, 0.0);
            assert!((f.alpha - (f.c / f.a).sqrt()).abs() <= 1e-12 * f.alpha);
        }
        // Well-conditioned shapes check the identity tightly.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..6 {
            let h: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.3..0.3)).collect();
            let params = LevinsonParams::new(rng.gen_range(0.5..2.0), h, 0.2).unwrap();
            let f = conrey_functionals(&params).unwrap();
            assert!(
                (f.b.re - (f.w1_sq - 1.0) / 2.0).abs() <= 1e-12 * (1.0 + f.w1_sq),
                "B = {} vs endpoint form {}",
                f.b.re,
                (f.w1_sq - 1.0) / 2.0
            );
        }
    }

    #[test]
    fn tabulated_rows_reproduce_published_proportions() {
        for i in 0..3 {
            let params = tabulated(i);
            let g = proportion_objective(&params).unwrap();
            let prop = 1.0 - g;
            let reference = ROWS[i].3;
            assert!(
                (prop - reference).abs() < 1e-9,
                "row {i}: 1−g = {prop:.13} vs reference {reference:.13}"
            );
            // The published figures are the proportions truncated (not
            // rounded) to 4 decimals.
            let truncated = (prop * 1e4).floor() / 1e4;
            let published = [0.0165, 0.0297, 0.0693][i];
            assert!(
                (truncated - published).abs() < 1e-12,
                "row {i}: truncation {truncated} vs published {published}"
            );
        }
    }

    #[test]
    fn tabulated_rows_are_near_stationary() {
        for i in 0..3 {
            let norm = objective_gradient_norm(&tabulated(i)).unwrap();
            assert!(norm <= 1e-4, "row {i}: |∇g| = {norm:.3e}");
        }
    }

    #[test]
    fn reparameterization_paths_agree() {
        // 1 − g at R′ = 2R (functionals route) vs 1 − (1/2R)·ln(bracket at
        // 2R) (closed-form-infimum route): the same number through two
        // independently written code paths.
        let cases = [
            (1.3, vec![0.4, -0.2], 0.2),
            (2.7, vec![-1.1], 0.25),
            (0.9, vec![0.3, 0.1, -0.5, 0.2], 1.0 / 6.0),
            (4.2, vec![], 0.22),
        ];
        for (r, h, nu) in cases {
            let doubled = LevinsonParams::new(2.0 * r, h.clone(), nu).unwrap();
            let a = 1.0 - proportion_objective(&doubled).unwrap();
            let b =
                proportion_via_mollified_inf(&LevinsonParams::new(r, h, nu).unwrap()).unwrap();
            assert!(
                (a - b).abs() <= 1e-13 * (1.0 + a.abs()),
                "R = {r}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn tanh_limit_branch_is_continuous() {
        // Q = 1, tiny r: bracket → (1+1)/2 + A/ξ → 1 + 2/ν as r → 0.
        let q = Polynomial::new(vec![1.0]);
        let far = closed_form_bracket(&q, 1e-9, 0.125).unwrap(); // tanh path
        let near = closed_form_bracket(&q, 1e-11, 0.125).unwrap(); // limit path
        assert!((far - 9.0).abs() < 1e-6, "tanh path {far}");
        assert!((near - 9.0).abs() < 1e-6, "limit path {near}");
    }

    #[test]
    fn optimal_polynomial_realizes_the_closed_form() {
        // Numeric minimum over degree ≤ 8 polynomials vs the analytic
        // infimum (1+w(1)²)/2 + Aα/tanh(ξα); the optimizer of the
        // unconstrained problem is sinh(ξαx)/sinh(ξα), entire, so the
        // degree-8 gap is far below the tolerance.
        let params = LevinsonParams::new(1.0, vec![0.3], 0.2).unwrap();
        let q = params.q_polynomial();
        let (r, xi) = (2.0 * params.r, params.nu / 2.0);
        let (p, v) = optimal_smoothing_polynomial(&q, r, xi, 8).unwrap();
        let closed = closed_form_bracket(&q, r, xi).unwrap();
        assert!(
            (v - closed).abs() <= 1e-6 * (1.0 + closed.abs()),
            "minimized {v} vs closed form {closed}"
        );
        assert!(p.eval(0.0).abs() < 1e-12);
        assert!((p.eval(1.0) - 1.0).abs() < 1e-12);
        // Returned pair is self-consistent and beats the linear baseline.
        let again = c_pq(&p, &q, r, xi).unwrap();
        assert!((again - v).abs() < 1e-12);
        let linear = c_pq(&Polynomial::x(), &q, r, xi).unwrap();
        assert!(v <= linear + 1e-12);
    }

    #[test]
    fn mollified_mainterm_binds_parameters() {
        // Q = 1 (no h): the main term is c(P, 1, 2R, ν/2) itself.
        let params = LevinsonParams::new(0.8, vec![], 0.25).unwrap();
        let p = Polynomial::x();
        let direct = c_pq(&p, &Polynomial::new(vec![1.0]), 1.6, 0.125).unwrap();
        let bound = mollified_moment_mainterm(&params, &p, 1e4).unwrap();
        assert_eq!(direct, bound);
        assert!(bound >= 1.0);
        assert!(matches!(
            mollified_moment_mainterm(&params, &p, 2.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn nu_from_theta_is_exact() {
        assert_eq!(nu_from_theta(7, 64).unwrap(), (5, 27));
        assert_eq!(nu_from_theta(0, 1).unwrap(), (1, 4));
        // Reduction is genuine: θ = 1/2 → (1−1)/(4+1) = 0/5 → 0/1.
        assert_eq!(nu_from_theta(1, 2).unwrap(), (0, 1));
        assert!(nu_from_theta(1, 0).is_err());
    }

    #[test]
    fn optimizer_smoke_is_deterministic_and_descends() {
        let (p1, prop1) = optimize_proportion(0.25, 1, 4, 7).unwrap();
        let (p2, prop2) = optimize_proportion(0.25, 1, 4, 7).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(prop1, prop2);
        // The polished point beats every raw start drawn from the same
        // stream.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g_best = 1.0 - prop1;
        for _ in 0..4 {
            let start = LevinsonParams::new(
                rng.gen_range(1.0..12.0),
                vec![rng.gen_range(-4.0..4.0)],
                0.25,
            )
            .unwrap();
            assert!(g_best <= proportion_objective(&start).unwrap() + 1e-12);
        }
    }

    #[test]
    fn degree_zero_matches_a_grid_search() {
        // Q = 1: one-dimensional problem in R; sweep R ∈ [0.1, 20].
        let (params, prop) = optimize_proportion(0.25, 0, 8, 3).unwrap();
        assert!(params.h.is_empty());
        let mut grid_best = f64::INFINITY;
        let mut r = 0.1;
        while r <= 20.0 {
            let g = proportion_objective(&LevinsonParams::new(r, vec![], 0.25).unwrap())
                .unwrap();
            grid_best = grid_best.min(g);
            r += 1e-3;
        }
        let g_opt = 1.0 - prop;
        assert!(
            g_opt <= grid_best + 1e-9 && (g_opt - grid_best).abs() <= 1e-6,
            "optimizer {g_opt} vs grid {grid_best}"
        );
    }

    #[test]
    fn solve_dense_inverts_a_known_system() {
        let a = vec![
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = a
            .iter()
            .map(|row| row.iter().zip(&x_true).map(|(r, x)| r * x).sum())
            .collect();
        let x = solve_dense(a, b).unwrap();
        for (got, want) in x.iter().zip(&x_true) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(matches!(
            solve_dense(vec![vec![0.0; 2]; 2], vec![1.0, 1.0]),
            Err(Error::FitIllConditioned(_))
        ));
    }
}
