//! Error types shared across the crate.

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument was malformed (wrong length, out of order,
    /// non-finite, mismatched intervals, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The inputs were well-formed but outside the mathematical domain of the
    /// operation (point outside the interval, non-probability state, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A run configuration failed to parse or validate. The message names the
    /// offending key.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
