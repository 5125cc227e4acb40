use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("index {index:?} lies outside the truncation box")]
    OutOfBox { index: Vec<u32> },
    #[error("series has a nonzero constant term")]
    NonZeroConstantTerm,
    #[error("pole: {0}")]
    Pole(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource limit: {required} coefficients needed, budget is {budget}")]
    ResourceLimit { required: u128, budget: u64 },
    #[error("corrupt cache file {path}: {reason}")]
    CacheCorrupt { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
