use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Gaussian coefficient must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("interval endpoints out of order: {0} > {1}")]
    ReversedInterval(f64, f64),
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("quadratic form is not positive definite")]
    NotPositiveDefinite,
    #[error("odd multi-index where an even one is required")]
    OddMultiIndex,
    #[error("malformed graph: {0}")]
    MalformedGraph(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
