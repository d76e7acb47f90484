use thiserror::Error;

use crate::rational::ParseRationalError;

#[derive(Debug, Error)]
pub enum AdnbError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error(transparent)]
    Rational(#[from] ParseRationalError),
    #[error("negative value in {0}")]
    Negative(&'static str),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("instance is empty after preprocessing")]
    Empty,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("internal bound exceeded (defect): {0}")]
    BoundExceeded(String),
    #[error("oracle cap exceeded: n*g = {0} > {1}")]
    OracleCap(usize, usize),
    #[error("flow is not a maximum flow")]
    NotMaximum,
    #[error("scale factor {0} outside (0, {1}]")]
    ScaleRange(String, String),
    #[error("price recovery failed: {0}")]
    Recovery(String),
}

impl From<serde_json::Error> for AdnbError {
    fn from(e: serde_json::Error) -> Self {
        AdnbError::Malformed(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, AdnbError>;
