//! Numerical toolkit for desk-scale verification of second-moment formulas of
//! degree-two L-functions attached to holomorphic cusp forms.
//!
//! The crate is organized bottom-up:
//!
//! * [`forms`] — modular-form metadata, Hecke eigenvalues λ_f(n), and the
//!   multiplicative mollifier coefficients μ_f(n);
//! * [`analytic`] — scalar special functions (log-gamma, zeta) and shared
//!   constants;
//! * [`lfunc`] — completed-factor ratios, smoothed functional-equation
//!   kernels, and direct L-value evaluation;
//! * [`rankin`] — Rankin–Selberg and symmetric-square constants: the moment
//!   coefficients 𝔞_f, 𝔟_f, the arithmetic factor A of the shifted fourth
//!   Euler product, and the moment-polynomial contour check;
//! * [`mainterm`] — mollifier polynomials and the diagonal main-term
//!   pairings c(α,β) and c(P,Q,r,ξ);
//! * [`levinson`] — critical-zero proportion functionals and their
//!   optimization over mollifier data;
//! * [`experiment`] — windowed numerical moments of |L|² on the critical
//!   line compared against the predicted main terms.
//!
//! All floating-point work is double precision; each operation documents its
//! accuracy target and the tests pin frozen high-precision references.

pub mod analytic;
pub mod cli;
pub mod experiment;
pub mod forms;
pub mod levinson;
pub mod lfunc;
pub mod mainterm;
pub mod rankin;

use std::fmt;

/// Unified error type for all toolkit operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A coefficient index beyond the tabulated range was requested.
    IndexOutOfRange { index: u64, max_n: u64 },
    /// A coefficient file skips or repeats an index.
    MissingIndex { expected: u64, found: u64 },
    /// A loaded coefficient table violates the Hecke multiplicative relation.
    HeckeViolation { m: u64, n: u64, deviation: f64 },
    /// A loaded coefficient table does not have λ(1) = 1.
    NotNormalized,
    /// Modular-form metadata violates its invariants (odd weight, level not
    /// square-free, root number not ±1, ...).
    InvalidForm(String),
    /// log_gamma evaluated at a non-positive integer.
    PoleAtNonpositiveInteger,
    /// A completed-factor ratio hit a gamma pole through its shift arguments.
    GammaPole,
    /// zeta evaluated at s = 1.
    PoleAtOne,
    /// Parameters outside the admissible analytic domain of an operation.
    OutsideDomain(String),
    /// Contour radii violate the constraints of the double contour integral.
    RadiiInvalid(String),
    /// A least-squares extraction was too ill-conditioned to trust.
    FitIllConditioned(String),
    /// The coefficient table is too short for the requested computation.
    CoefficientTableTooSmall { needed: u64, have: u64 },
    /// A smoothed-kernel truncation tail cannot be brought under the
    /// operation's error budget with the available parameters.
    TruncationBudgetExceeded { tail: f64, budget: f64 },
    /// A shifted main-term evaluation hit the removable α + β = 0 singularity
    /// without the explicit limit flag.
    DegenerateShift,
    /// A mollifier polynomial violates its normalization P(0) = 0, P(1) = 1.
    BadNormalization,
    /// A Levinson parameter set has R ≤ 0.
    NonpositiveR,
    /// An invalid parameter value (sizes, cutoffs, polynomial data, ...).
    InvalidParameter(String),
    /// I/O failure while reading or writing an external file.
    Io(String),
    /// A file had syntactically invalid content.
    Parse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::IndexOutOfRange { index, max_n } => {
                write!(f, "coefficient index {index} out of range (table holds 1..={max_n})")
            }
            Error::MissingIndex { expected, found } => {
                write!(f, "coefficient file out of order: expected index {expected}, found {found}")
            }
            Error::HeckeViolation { m, n, deviation } => write!(
                f,
                "Hecke relation violated at (m, n) = ({m}, {n}): deviation {deviation:.3e}"
            ),
            Error::NotNormalized => write!(f, "coefficient table must satisfy lambda(1) = 1"),
            Error::InvalidForm(msg) => write!(f, "invalid modular form: {msg}"),
            Error::PoleAtNonpositiveInteger => {
                write!(f, "log_gamma pole: z is a non-positive integer")
            }
            Error::GammaPole => {
                write!(f, "gamma pole reached through the completed-factor shift arguments")
            }
            Error::PoleAtOne => write!(f, "zeta pole at s = 1"),
            Error::OutsideDomain(msg) => write!(f, "parameters outside admissible domain: {msg}"),
            Error::RadiiInvalid(msg) => write!(f, "invalid contour radii: {msg}"),
            Error::FitIllConditioned(msg) => write!(f, "ill-conditioned fit: {msg}"),
            Error::CoefficientTableTooSmall { needed, have } => {
                write!(f, "coefficient table too small: need {needed}, have {have}")
            }
            Error::TruncationBudgetExceeded { tail, budget } => write!(
                f,
                "truncation tail {tail:.3e} exceeds the error budget {budget:.3e}"
            ),
            Error::DegenerateShift => write!(
                f,
                "alpha + beta = 0 is a removable singularity; pass the explicit limit flag"
            ),
            Error::BadNormalization => {
                write!(f, "mollifier polynomial must satisfy P(0) = 0 and P(1) = 1")
            }
            Error::NonpositiveR => write!(f, "Levinson parameter R must be positive"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Compensated (Kahan) accumulator for complex sums with many small terms.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KahanC64 {
    sum: num_complex::Complex64,
    carry: num_complex::Complex64,
}

impl KahanC64 {
    pub(crate) fn new() -> Self {
        KahanC64 {
            sum: num_complex::Complex64::new(0.0, 0.0),
            carry: num_complex::Complex64::new(0.0, 0.0),
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, term: num_complex::Complex64) {
        let y = term - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> num_complex::Complex64 {
        self.sum
    }
}

/// Compensated (Kahan) accumulator for real sums.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KahanF64 {
    sum: f64,
    carry: f64,
}

impl KahanF64 {
    pub(crate) fn new() -> Self {
        KahanF64 { sum: 0.0, carry: 0.0 }
    }

    #[inline]
    pub(crate) fn add(&mut self, term: f64) {
        let y = term - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

/// Worker-thread count for the embarrassingly parallel inner loops
/// (coefficient builder, moment sweeps): the `CLTK_THREADS` environment
/// variable if set to a positive integer, otherwise the machine parallelism.
/// Threaded loops partition work deterministically and reduce partial sums
/// in a fixed order, so results are reproducible for a given setting (the
/// setting itself may shift last-bit rounding and is echoed in all reports).
pub(crate) fn thread_count() -> usize {
    if let Ok(v) = std::env::var("CLTK_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}
