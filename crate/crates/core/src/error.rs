//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation precondition (bad argument, dimension
    /// mismatch, degenerate geometry, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration file failed to parse or validate. The message carries
    /// the offending field path where known.
    #[error("config error: {0}")]
    Config(String),

    /// A dataset container, manifest, or checkpoint is unreadable or
    /// internally inconsistent.
    #[error("data error: {0}")]
    Data(String),

    /// A numerical procedure failed to converge or produced non-finite
    /// values (e.g. the training loss became NaN).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code for the CLI: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Io(_) => 3,
            Error::Numerical(_) => 4,
            Error::InvalidInput(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
