use std::io;

use thiserror::Error;

/// Errors raised by the diagnosis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Unknown exercise, incompatible fault mode, out-of-range setting.
    #[error("configuration error: {0}")]
    Config(String),

    /// A precondition on caller-supplied data does not hold.
    #[error("input error: {0}")]
    Input(String),

    /// Malformed landmark file content.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Malformed record on an incremental landmark stream.
    #[error("stream error at record {record}: {message}")]
    Stream { record: usize, message: String },

    /// Matrix dimensions disagree inside the engine.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
