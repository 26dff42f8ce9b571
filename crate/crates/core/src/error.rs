use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Record { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing embedding for sentence {0}")]
    MissingEmbedding(String),

    #[error("vector has zero or non-finite norm{}", key.as_ref().map(|k| format!(" (key {k})")).unwrap_or_default())]
    DegenerateVector { key: Option<String> },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("malformed {kind} file: {message}")]
    Format { kind: &'static str, message: String },

    #[error("inputs do not belong together: {0}")]
    Mismatch(String),

    #[error("internal consistency violated: {0}")]
    Inconsistent(String),

    #[error("cannot sample from an all-zero distribution")]
    ZeroMass,

    #[error("{0}")]
    Undefined(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(kind: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            kind,
            message: message.into(),
        }
    }
}
