use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid game config: {0}")]
    InvalidConfig(String),
    #[error("invalid transcript: {0}")]
    InvalidTranscript(String),
    #[error("corpus is empty after normalization")]
    EmptyCorpus,
    #[error("unknown question type label `{0}`")]
    UnknownLabel(String),
}

/// Errors from reading or writing the on-disk formats.
#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Rejected {
        line: usize,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{what} hash mismatch: manifest records {expected}, file hashes to {actual}")]
    HashMismatch {
        what: String,
        expected: String,
        actual: String,
    },
    #[error("unsupported schema_version {0}")]
    SchemaVersion(u32),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl PersistError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PersistError::Io {
            path: path.into(),
            source,
        }
    }
}
