use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("n = {n} exceeds the exact engine limit of {cap}; use Monte Carlo instead")]
    SizeCap { n: usize, cap: usize },
    #[error("unsupported curve variant for {0}")]
    Unsupported(&'static str),
    #[error("max DU FDR is not monotone in beta along the search trace: {0}")]
    NonMonotoneTrace(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
