use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("outside the supported domain: {0}")]
    Domain(String),
    #[error("argument on an excluded branch: {0}")]
    Branch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("support violation: {0}")]
    Support(String),
    #[error("function class violation: {0}")]
    Class(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("size limit exceeded: {0}")]
    SizeExceeded(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParams(msg.into()))
}
