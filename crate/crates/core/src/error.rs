use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library reports. The `Display` text begins with a stable
/// class prefix (`invalid argument:`, `hypothesis violation:`, ...) so callers
/// can parse a one-line reason.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),

    /// A density evaluated to a non-finite value or broke its sign declaration.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// An input breaks a precondition of the bounds (sign of `K`, `R L > 0`, integrability).
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("no convergence: {iterations} iterations, last estimate {last_estimate}")]
    NoConvergence {
        iterations: usize,
        last_estimate: f64,
    },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("unstable system: stationary drift {drift} is not negative")]
    Unstable { drift: f64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("verification failure: check {check}: {detail}")]
    VerificationFailure { check: String, detail: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn hypothesis(msg: impl Into<String>) -> Self {
        Error::HypothesisViolation(msg.into())
    }
}
