//! Error type shared across the workspace.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation's input contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An exact/enumeration oracle was asked for more than it can afford.
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    /// Internal state mismatch, e.g. a backward pass fed a foreign cache.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Binary file did not match its declared format.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// Random generation could not satisfy its constraints.
    #[error("generation failed: {0}")]
    Generation(String),

    /// Configuration text was malformed or carried unknown keys.
    #[error("config error: {0}")]
    Config(String),

    /// Training produced non-finite values.
    #[error("training diverged at step {step} in `{tensor}`: {detail}")]
    Diverged {
        step: u64,
        tensor: String,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
