use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration for `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate modality: standard deviation is zero")]
    DegenerateModality,

    #[error("invalid memory entry: {0}")]
    InvalidEntry(&'static str),

    #[error("memory is empty: {0}")]
    EmptyMemory(&'static str),

    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("task template cycle through `{0}`")]
    Cycle(String),

    #[error("parse error at record {index}: {message}")]
    Record { index: usize, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: line {line}: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("confusion matrix has no scored outcomes")]
    EmptyConfusion,

    #[error("incomplete run: {modality} is missing step {step}")]
    IncompleteRun { modality: String, step: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
