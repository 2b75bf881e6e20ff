use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("correlation must lie in [-1, 1], got {0}")]
    InvalidCorrelation(f64),
    #[error("standard deviations must be positive and finite, got ({0}, {1})")]
    InvalidScale(f64, f64),
    #[error("degenerate correlation |rho| = 1: the covariance matrix has no inverse")]
    DegenerateCorrelation,
    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),
    #[error("thresholds must satisfy u2 ≤ u1 (got u1 = {u1}, u2 = {u2})")]
    UnsortedThreshold { u1: f64, u2: f64 },
    #[error("regime violation: {0}")]
    RegimeViolation(String),
    #[error("NaN input")]
    NanInput,
    #[error("invalid scaling sequence: {0}")]
    InvalidScaling(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("only {hits} conditioning hits (need at least 30)")]
    InsufficientHits { hits: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
