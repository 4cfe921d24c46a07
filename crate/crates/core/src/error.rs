use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numerical core.
///
/// Divergent integrals and infinite norms are not errors: they are carried
/// as data (`Integral::Divergent`, `+inf`) so that callers can observe them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid step function: {0}")]
    InvalidStepFunction(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid N-function: {0}")]
    InvalidNFunction(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("quadrature failure on [{a}, {b}]: estimate {partial} with error {error_estimate}")]
    QuadratureFailure {
        a: f64,
        b: f64,
        partial: f64,
        error_estimate: f64,
    },

    #[error("evaluator failure in cell [{cell_start}, {cell_end}): {detail}")]
    EvaluatorFailure {
        cell_start: f64,
        cell_end: f64,
        detail: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("norm overflow: modular still exceeds 1 at lambda = {cap}")]
    NormOverflow { cap: f64 },

    #[error("non-rearrangeable level: super-level set of {level} has infinite measure")]
    NonRearrangeableLevel { level: f64 },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
