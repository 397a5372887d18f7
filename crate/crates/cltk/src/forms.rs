//! Modular-form metadata, Hecke-eigenvalue tables, and mollifier coefficients.
//!
//! The builtin form is the discriminant cusp form Δ (weight 12, level 1,
//! root number +1), whose q-expansion coefficients τ(n) are generated by
//! exact integer power-series arithmetic. General forms (even weight,
//! square-free level) enter through coefficient files; their eigenvalues are
//! validated against the Hecke multiplicative relation before use.
//!
//! Normalization: λ(n) = a(n) / n^{(k−1)/2}, so λ(1) = 1 and the Hecke
//! relation reads λ(m)λ(n) = Σ_{d | (m,n), (d,N)=1} λ(mn/d²).

use crate::{Error, Result};
use num_complex::Complex64;
use std::path::Path;

/// Where a form's coefficients come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffSource {
    /// The builtin discriminant form Δ: weight 12, level 1, ε = +1.
    BuiltinDelta,
    /// Coefficients supplied by an external `n,lambda` file.
    File,
}

/// Metadata of a holomorphic primitive cusp form of even weight and
/// square-free level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModularForm {
    /// Weight k (even, ≥ 2).
    pub weight: u32,
    /// Level N (square-free).
    pub level: u64,
    /// Root number ε ∈ {+1, −1} of the functional equation.
    pub root_number: i8,
    /// Provenance of the eigenvalue table.
    pub coeff_source: CoeffSource,
}

impl ModularForm {
    /// The builtin discriminant form Δ (k = 12, N = 1, ε = +1).
    pub fn delta() -> Self {
        ModularForm {
            weight: 12,
            level: 1,
            root_number: 1,
            coeff_source: CoeffSource::BuiltinDelta,
        }
    }

    /// Metadata for a file-backed form. The root number is caller-supplied
    /// metadata: it cannot be derived from a finite coefficient list.
    pub fn from_file_metadata(weight: u32, level: u64, root_number: i8) -> Result<Self> {
        let form = ModularForm {
            weight,
            level,
            root_number,
            coeff_source: CoeffSource::File,
        };
        form.validate()?;
        Ok(form)
    }

    /// Checks the structural invariants (even weight ≥ 2, square-free level,
    /// root number ±1).
    pub fn validate(&self) -> Result<()> {
        if self.weight < 2 || self.weight % 2 != 0 {
            return Err(Error::InvalidForm(format!(
                "weight must be even and >= 2, got {}",
                self.weight
            )));
        }
        if self.level == 0 || !is_square_free(self.level) {
            return Err(Error::InvalidForm(format!(
                "level must be square-free and positive, got {}",
                self.level
            )));
        }
        if self.root_number != 1 && self.root_number != -1 {
            return Err(Error::InvalidForm(format!(
                "root number must be +1 or -1, got {}",
                self.root_number
            )));
        }
        Ok(())
    }

    /// The distinct prime factors of the level, ascending.
    pub fn level_prime_factors(&self) -> Vec<u64> {
        prime_factors(self.level)
    }
}

/// A pair of complex spectral shifts (α, β). The moment formulas assume both
/// are O(1/ln T); callers enforce whatever multiple their context requires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftPair {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl ShiftPair {
    pub fn new(alpha: Complex64, beta: Complex64) -> Self {
        ShiftPair { alpha, beta }
    }

    /// Both shifts zero — the unshifted second moment.
    pub fn zero() -> Self {
        ShiftPair {
            alpha: Complex64::new(0.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
        }
    }
}

/// Immutable table of normalized Hecke eigenvalues λ(1..max_n) and the
/// multiplicative mollifier coefficients μ(1..max_n).
///
/// Internally both arrays are 1-indexed (slot 0 is unused and zero), so
/// `lambda_slice()[n]` is λ(n).
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    max_n: u64,
    lambda: Vec<f64>,
    mu: Vec<f64>,
}

impl CoefficientTable {
    /// Largest tabulated index.
    pub fn max_n(&self) -> u64 {
        self.max_n
    }

    /// λ(n), checked.
    pub fn lambda(&self, n: u64) -> Result<f64> {
        if n == 0 || n > self.max_n {
            return Err(Error::IndexOutOfRange {
                index: n,
                max_n: self.max_n,
            });
        }
        Ok(self.lambda[n as usize])
    }

    /// μ(n), checked.
    pub fn mu(&self, n: u64) -> Result<f64> {
        if n == 0 || n > self.max_n {
            return Err(Error::IndexOutOfRange {
                index: n,
                max_n: self.max_n,
            });
        }
        Ok(self.mu[n as usize])
    }

    /// 1-indexed view of λ: `lambda_slice()[n]` = λ(n), index 0 unused.
    pub fn lambda_slice(&self) -> &[f64] {
        &self.lambda
    }

    /// 1-indexed view of μ: `mu_slice()[n]` = μ(n), index 0 unused.
    pub fn mu_slice(&self) -> &[f64] {
        &self.mu
    }
}

/// Largest `max_n` accepted by the builtin builder. Above this the partial
/// products of the integer series (whose coefficients grow like n^{5.5+ε})
/// would no longer have comfortable i128 headroom; the test profile keeps
/// overflow checks on as a second line of defense.
pub const MAX_BUILTIN_N: u64 = 2_500_000;

/// Builds the table for the builtin form Δ: exact integer q-expansion of
/// Δ = q·∏(1−qⁿ)²⁴, normalized to λ(n) = τ(n)/n^{11/2}, with μ filled via
/// [`mu_from_lambda`].
pub fn build_delta_coefficients(max_n: u64) -> Result<CoefficientTable> {
    if max_n == 0 {
        return Err(Error::InvalidParameter("max_n must be >= 1".into()));
    }
    if max_n > MAX_BUILTIN_N {
        return Err(Error::InvalidParameter(format!(
            "builtin builder supports max_n <= {MAX_BUILTIN_N} (integer headroom)"
        )));
    }
    let tau = tau_integers(max_n as usize);
    let mut lambda = vec![0.0f64; max_n as usize + 1];
    lambda[1] = 1.0;
    for n in 2..=max_n as usize {
        lambda[n] = (tau[n] as f64) / (n as f64).powf(5.5);
    }
    let form = ModularForm::delta();
    let mu = mu_from_lambda(&lambda, &form)?;
    Ok(CoefficientTable {
        max_n,
        lambda,
        mu,
    })
}

/// Exact τ(1..max_n) by repeated convolution with the sparse cube
/// η(q)³ = Σ_{j≥0} (−1)^j (2j+1) q^{j(j+1)/2}: eight cubes make the
/// 24th power, and τ(n) is the (n−1)-st coefficient of η²⁴.
/// Exposed for tests; ordinary callers want [`build_delta_coefficients`].
pub fn tau_integers(max_n: usize) -> Vec<i128> {
    let len = max_n; // degrees 0..max_n-1 of η^24
    let sparse = eta_cube_sparse(len);
    // Start from η³ itself, then convolve seven more cubes in.
    let mut acc = vec![0i128; len];
    for &(e, c) in &sparse {
        acc[e] = c;
    }
    for _ in 0..7 {
        acc = convolve_dense_sparse(&acc, &sparse);
    }
    let mut tau = vec![0i128; max_n + 1];
    for n in 1..=max_n {
        tau[n] = acc[n - 1];
    }
    tau
}

/// Nonzero coefficients of η(q)³ up to degree `len`−1, ascending exponents.
fn eta_cube_sparse(len: usize) -> Vec<(usize, i128)> {
    let mut out = Vec::new();
    let mut j: usize = 0;
    loop {
        let e = j * (j + 1) / 2;
        if e >= len {
            break;
        }
        let c = (2 * j + 1) as i128;
        out.push((e, if j % 2 == 0 { c } else { -c }));
        j += 1;
    }
    out
}

/// Dense × sparse polynomial product truncated to the dense length, threaded
/// over disjoint output chunks (deterministic: integer arithmetic, identical
/// partition-independent sums).
fn convolve_dense_sparse(dense: &[i128], sparse: &[(usize, i128)]) -> Vec<i128> {
    let len = dense.len();
    let nt = crate::thread_count().min(len.max(1));
    let chunk = len.div_ceil(nt).max(1);
    let mut out = vec![0i128; len];
    std::thread::scope(|scope| {
        for (ci, slot) in out.chunks_mut(chunk).enumerate() {
            let lo = ci * chunk;
            scope.spawn(move || {
                let hi = lo + slot.len();
                for &(e, c) in sparse {
                    if e >= hi {
                        break;
                    }
                    for i in e.max(lo)..hi {
                        slot[i - lo] += c * dense[i - e];
                    }
                }
            });
        }
    });
    out
}

/// Derives the multiplicative mollifier coefficients from λ:
/// μ(1) = 1, μ(p) = −λ(p), μ(p²) = 1 if p ∤ N else 0, μ(p^j) = 0 for j ≥ 3,
/// extended multiplicatively.
pub fn mu_from_lambda(lambda: &[f64], form: &ModularForm) -> Result<Vec<f64>> {
    if lambda.len() < 2 || (lambda[1] - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized);
    }
    let max_n = lambda.len() - 1;
    let spf = smallest_prime_factor_sieve(max_n);
    let mut mu = vec![0.0f64; max_n + 1];
    mu[1] = 1.0;
    for n in 2..=max_n {
        let mut m = n;
        let mut value = 1.0f64;
        while m > 1 {
            let p = spf[m] as usize;
            let mut e = 0u32;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            value *= match e {
                1 => -lambda[p],
                2 => {
                    if form.level % p as u64 == 0 {
                        0.0
                    } else {
                        1.0
                    }
                }
                _ => 0.0,
            };
            if value == 0.0 {
                break;
            }
        }
        mu[n] = value;
    }
    Ok(mu)
}

/// Loads a coefficient table from an `n,lambda` file (optional header line
/// `n,lambda`, then `n,value` rows with n strictly increasing from 1),
/// validates the normalization and the Hecke relation on all pairs with
/// mn ≤ max_n, and fills μ. The `coeffs` command's CSV output loads back
/// unchanged.
pub fn load_coefficients(path: &Path, form: &ModularForm) -> Result<CoefficientTable> {
    form.validate()?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut lambda: Vec<f64> = vec![0.0];
    let mut first = true;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if first {
            first = false;
            if line == "n,lambda" {
                continue;
            }
        }
        let (ns, vs) = line.split_once(',').ok_or_else(|| {
            Error::Parse(format!("line {}: expected 'n,value'", lineno + 1))
        })?;
        let n: u64 = ns
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad index '{ns}'", lineno + 1)))?;
        let v: f64 = vs
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad value '{vs}'", lineno + 1)))?;
        let expected = lambda.len() as u64;
        if n != expected {
            return Err(Error::MissingIndex { expected, found: n });
        }
        lambda.push(v);
    }
    if lambda.len() < 2 {
        return Err(Error::Parse("file lists no coefficients".into()));
    }
    if (lambda[1] - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized);
    }
    let max_n = lambda.len() as u64 - 1;
    validate_hecke(&lambda, form)?;
    let mu = mu_from_lambda(&lambda, form)?;
    Ok(CoefficientTable {
        max_n,
        lambda,
        mu,
    })
}

/// Checks λ(m)λ(n) = Σ_{d|(m,n),(d,N)=1} λ(mn/d²) on every pair with
/// mn ≤ max_n, with absolute tolerance 1e−9 (far above honest rounding of a
/// printed table, far below any genuine violation).
fn validate_hecke(lambda: &[f64], form: &ModularForm) -> Result<()> {
    let max_n = lambda.len() as u64 - 1;
    for m in 2..=max_n {
        if m * m > max_n {
            break;
        }
        for n in m..=max_n / m {
            let sum = hecke_divisor_sum(m, n, lambda, form.level)?;
            let deviation = (sum - lambda[m as usize] * lambda[n as usize]).abs();
            if deviation > 1e-9 {
                return Err(Error::HeckeViolation { m, n, deviation });
            }
        }
    }
    Ok(())
}

fn hecke_divisor_sum(m: u64, n: u64, lambda: &[f64], level: u64) -> Result<f64> {
    let max_n = lambda.len() as u64 - 1;
    let product = m.checked_mul(n).ok_or(Error::IndexOutOfRange {
        index: u64::MAX,
        max_n,
    })?;
    if product > max_n {
        return Err(Error::IndexOutOfRange {
            index: product,
            max_n,
        });
    }
    let g = gcd(m, n);
    let mut sum = 0.0f64;
    for d in divisors(g) {
        if gcd(d, level) == 1 {
            sum += lambda[(product / (d * d)) as usize];
        }
    }
    Ok(sum)
}

/// Hecke divisor sum Σ_{d|(m,n),(d,N)=1} λ(mn/d²); equals λ(m)λ(n) for a
/// genuine eigenform table.
pub fn hecke_product(
    m: u64,
    n: u64,
    table: &CoefficientTable,
    form: &ModularForm,
) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("indices must be positive".into()));
    }
    hecke_divisor_sum(m, n, &table.lambda, form.level)
}

/// Brute-force shifted convolution Σ λ(m₁)λ(m₂) over ℓ₁m₁ − ℓ₂m₂ = h with
/// m₁, m₂ in the inclusive range — a diagnostic for off-diagonal sizes, not
/// an estimate.
pub fn shifted_convolution_brute(
    l1: u64,
    l2: u64,
    h: i64,
    range: (u64, u64),
    table: &CoefficientTable,
) -> Result<f64> {
    if l1 == 0 || l2 == 0 {
        return Err(Error::InvalidParameter("l1, l2 must be positive".into()));
    }
    if h == 0 {
        return Err(Error::InvalidParameter("h must be nonzero".into()));
    }
    let (lo, hi) = range;
    if lo == 0 || hi < lo {
        return Err(Error::InvalidParameter(
            "range must satisfy 1 <= lo <= hi".into(),
        ));
    }
    if hi > table.max_n {
        return Err(Error::IndexOutOfRange {
            index: hi,
            max_n: table.max_n,
        });
    }
    let lambda = table.lambda_slice();
    let mut sum = 0.0f64;
    for m1 in lo..=hi {
        let lhs = l1 as i128 * m1 as i128 - h as i128;
        if lhs <= 0 || lhs % l2 as i128 != 0 {
            continue;
        }
        let m2 = (lhs / l2 as i128) as u64;
        if m2 >= lo && m2 <= hi {
            sum += lambda[m1 as usize] * lambda[m2 as usize];
        }
    }
    Ok(sum)
}

/// Smallest-prime-factor sieve: `spf[n]` is the least prime dividing n
/// (spf[0] = spf[1] = 0). Shared by μ construction, Euler products, and the
/// divisor-driven pair sums.
pub fn smallest_prime_factor_sieve(limit: usize) -> Vec<u32> {
    let mut spf = vec![0u32; limit + 1];
    let mut i = 2usize;
    while i <= limit {
        if spf[i] == 0 {
            let mut j = i;
            while j <= limit {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
        i += 1;
    }
    spf
}

/// Greatest common divisor.
pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// All positive divisors of n (unsorted), by trial-division factorization.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    if n <= 1 {
        return out;
    }
    for (p, e) in factorize(n) {
        let prev = out.clone();
        let mut pe = 1u64;
        for _ in 0..e {
            pe *= p;
            for &d in &prev {
                out.push(d * pe);
            }
        }
    }
    out
}

/// Prime factorization (p, multiplicity) by trial division, ascending p.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0u32;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Distinct prime factors, ascending.
pub fn prime_factors(n: u64) -> Vec<u64> {
    factorize(n).into_iter().map(|(p, _)| p).collect()
}

fn is_square_free(n: u64) -> bool {
    factorize(n).iter().all(|&(_, e)| e == 1)
}

/// All primes up to `limit`, ascending (sieve of Eratosthenes).
pub fn primes_up_to(limit: usize) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}
