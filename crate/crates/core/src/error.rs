use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The analysis or simulation needs sites outside the current window.
    /// Callers are expected to extend the environment and retry.
    #[error("window exhausted: {0}")]
    WindowExhausted(String),

    #[error("unsupported coupling: {0}")]
    UnsupportedCoupling(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("precondition not met: {0}")]
    NotApplicable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
