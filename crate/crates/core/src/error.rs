use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the pipeline can report. The variant doubles as the
/// machine-readable error kind printed by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("learning error: {0}")]
    Learning(String),
    #[error("retrieval error: {0}")]
    Retrieval(String),
    #[error("scoring error: {0}")]
    Scoring(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("pairing error: {0}")]
    Pairing(String),
    #[error("generation error: {0}")]
    Generation(String),
    #[error("classification error: {0}")]
    Classification(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format(_) => "format",
            Error::Validation(_) => "validation",
            Error::Learning(_) => "learning",
            Error::Retrieval(_) => "retrieval",
            Error::Scoring(_) => "scoring",
            Error::Configuration(_) => "configuration",
            Error::Pairing(_) => "pairing",
            Error::Generation(_) => "generation",
            Error::Classification(_) => "classification",
        }
    }
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(format!("csv: {e}"))
    }
}
