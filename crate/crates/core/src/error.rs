use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in state field `{field}`")]
    NonFiniteState { field: &'static str },

    #[error("state violates closure bounds: {0}")]
    Unphysical(String),

    #[error("dark/bright basis undefined: Raman strength is zero")]
    UndefinedBasis,

    #[error("steady state not converged (residual {residual:.3e} after model time {elapsed:.3e} s)")]
    NotConverged { residual: f64, elapsed: f64 },

    #[error("eigen-decomposition failed: {0}")]
    Eigen(String),

    #[error("eigenvalue tracking ambiguous (best overlap {overlap:.3}); use a finer homotopy")]
    AmbiguousTracking { overlap: f64 },

    #[error("unstable regression matrix: eigenvalue with Re = {re:.3e} > 0")]
    Unstable { re: f64 },

    #[error("analytic linewidth formula singular (denominator {denominator:.3e})")]
    SingularFormula { denominator: f64 },

    #[error("filter-cavity solve failed: {0}")]
    Filter(String),

    #[error("spectrum has {} local maxima at offsets {maxima:?} rad/s", maxima.len())]
    MultiPeak { maxima: Vec<f64> },

    #[error("Lorentzian fit failed: {0}")]
    Fit(String),

    #[error("coherence measure undefined: excited-manifold population {0:.3e}")]
    UndefinedMeasure(f64),

    #[error("pulling coefficient nonlinear: Richardson error {error:.3e} on value {value:.3e}")]
    NonlinearPulling { value: f64, error: f64 },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
