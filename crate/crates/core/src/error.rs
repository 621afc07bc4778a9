use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("numerically degenerate: {0}")]
    Degenerate(String),
    #[error("construction undefined: {0}")]
    Construction(String),
    #[error("unclassifiable: {0}")]
    Unclassifiable(String),
    #[error("policy failed at trial {trial} (substream {stream}): {message}")]
    Policy { trial: u64, stream: u64, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Quadrature(_) | Error::Degenerate(_) | Error::Policy { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
