use std::path::PathBuf;

use thiserror::Error;

/// One failed manifest entry in an aggregated dataset error.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryError {
    pub entry: usize,
    pub subject_id: String,
    pub video_id: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("range: {0}")]
    Range(String),

    #[error("config: {0}")]
    Config(String),

    #[error("length: {0}")]
    Length(String),

    #[error("imputation: {0}")]
    Imputation(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("division by zero: {0}")]
    Division(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("training: {0}")]
    Training(String),

    #[error("{} invalid manifest entries (first: entry {}: {})", .0.len(), .0[0].entry, .0[0].message)]
    Dataset(Vec<EntryError>),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable token used as the CLI error prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Range(_) => "range",
            Error::Config(_) => "config",
            Error::Length(_) => "length",
            Error::Imputation(_) => "imputation",
            Error::UndefinedCorrelation(_) => "correlation",
            Error::Division(_) => "division",
            Error::Dimension { .. } => "dimension",
            Error::Training(_) => "training",
            Error::Dataset(_) => "dataset",
            Error::Fold { source, .. } => source.kind(),
            Error::Format(_) => "format",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
