//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by corpus generation, model training, and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a precondition.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data does not match the expected shape or size.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An input is numerically degenerate (for example all utterances identical).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A referenced file is missing or malformed.
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },

    /// A text artifact failed to parse.
    #[error("parse error in {what}: {message}")]
    Parse { what: String, message: String },

    /// Internal invariant violated; indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub fn io(path: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn parse(what: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Error::Parse {
            what: what.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
