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

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: not a valid LXRW1 container: {message}")]
    Container { path: PathBuf, message: String },

    #[error("zero vector for word {0}")]
    ZeroVector(String),

    #[error("zero vector in input")]
    ZeroInput,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("underdetermined mapping: {anchors} anchors for a {dim}-dimensional source space")]
    Underdetermined { anchors: usize, dim: usize },

    #[error("vocabulary mismatch at row {row}: {left:?} vs {right:?}")]
    VocabMismatch {
        row: usize,
        left: String,
        right: String,
    },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("correlation undefined: zero rank variance")]
    UndefinedCorrelation,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad user input (missing paths, invalid
    /// configuration) rather than a failure while doing the work.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Config(_) | Error::Invalid(_) => true,
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
