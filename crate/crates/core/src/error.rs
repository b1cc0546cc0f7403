use num_complex::Complex64;
use thiserror::Error;

use crate::spectrum::LengthSpectrum;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum ZsError {
    #[error("element with trace {trace} is not hyperbolic (|trace| <= 2){}", word_suffix(.word))]
    NonHyperbolicElement { trace: f64, word: Option<String> },

    #[error("invalid length {0}: lengths must be positive and finite")]
    InvalidLength(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("enumeration budget of {budget} words exhausted before the cutoff was certified")]
    EnumerationBudgetExceeded {
        budget: usize,
        partial: Box<LengthSpectrum>,
    },

    #[error("length spectrum is empty")]
    EmptySpectrum,

    #[error("t = {t} exceeds the spectrum cutoff {cutoff}")]
    CutoffExceeded { t: f64, cutoff: f64 },

    #[error("digamma has a pole at the nonpositive integer {0}")]
    PoleAtNonpositiveInteger(i64),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("Re(s) = {re} is not above the convergence abscissa {abscissa}")]
    ConvergenceRegionError { re: f64, abscissa: f64 },

    #[error("length spectrum is not certified complete")]
    IncompleteSpectrum,

    #[error("zeta function vanishes at s = {s} (factor k = {k}, n = {n})")]
    ZeroOfZeta { s: Complex64, k: u32, n: i64 },

    #[error("resonance at the origin makes the Hadamard factor undefined")]
    ZeroDivision,

    #[error("function vanishes on or near the contour at {0}; perturb the rectangle")]
    BoundaryZero(Complex64),

    #[error("root refinement did not converge near {0}")]
    NonConvergence(Complex64),

    #[error("residual signal fell below sampler precision after {} lengths", .partial.len())]
    PrecisionExhausted { partial: Vec<(f64, f64)> },

    #[error("conformal factor support touches the chart boundary at t = {0}")]
    SupportTouchesBoundary(f64),

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("finite-part fit residual {residual:e} exceeds tolerance {tolerance:e}")]
    ExpansionMismatch { residual: f64, tolerance: f64 },

    #[error("invalid R = {0}: must be positive")]
    InvalidR(f64),

    #[error("t = {t} exceeds the collar range (sinh t * l(dS) = {collar_area} > area {area})")]
    RangeExceeded { t: f64, collar_area: f64, area: f64 },
}

fn word_suffix(word: &Option<String>) -> String {
    match word {
        Some(w) => format!(" for word {w}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, ZsError>;
