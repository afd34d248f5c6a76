use thiserror::Error;

/// Errors raised by the spectral, solver and metric layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not strictly negative (largest eigenvalue {max_eigenvalue}); shift it first")]
    NotStrictlyNegative { max_eigenvalue: f64 },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("solution blow-up at t = {time}: |x| = {norm:e} exceeds sentinel {limit:e}")]
    BlowUp { time: f64, norm: f64, limit: f64 },

    #[error("unstable system: growth bound {growth_bound} >= 0, no certificate exists")]
    Unstable { growth_bound: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::InvalidArgument(msg.into()))
}
