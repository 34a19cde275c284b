//! Error type shared by the whole crate.

use thiserror::Error;

/// Errors produced by image decoding, configuration validation, and the
/// segmentation / metrics routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Underlying I/O failure while reading or writing a file. The cause is
    /// part of the message rather than a `source()` link, so error chains
    /// that print every link do not repeat it.
    #[error("i/o error: {0}")]
    Io(std::io::Error),

    /// Malformed or unsupported file content (bad magic, truncated payload, ...).
    #[error("format error: {0}")]
    Format(String),

    /// Invalid configuration value or an unsatisfiable parameter combination.
    #[error("config error: {0}")]
    Config(String),

    /// Image or label-map dimensions unsuitable for the requested operation.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Invalid argument value outside of configuration (empty histogram,
    /// mismatched vector lengths, label out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

impl Error {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
