//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("encoding error at byte {offset}: {message}")]
    Encoding { offset: usize, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("feature schema mismatch: model has {model}, input has {input}")]
    SchemaMismatch { model: String, input: String },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("missing models at node '{0}'")]
    MissingModels(String),

    #[error("state format version mismatch: file has {found}, this build reads {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupted state file '{path}': {message}")]
    CorruptState { path: String, message: String },

    #[error("io error on '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
