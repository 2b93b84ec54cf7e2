use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Pipeline stage named in fold-level errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Vocabulary,
    Weighting,
    Selection,
    Lsi,
    Fit,
    Predict,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Vocabulary => "vocabulary",
            Stage::Weighting => "tf-idf",
            Stage::Selection => "feature selection",
            Stage::Lsi => "lsi",
            Stage::Fit => "fit",
            Stage::Predict => "predict",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("malformed {format}: {message}")]
    Decode { format: &'static str, message: String },

    #[error("{solver} did not converge after {iterations} iterations ({detail})")]
    NonConvergence { solver: &'static str, iterations: usize, detail: String },

    #[error("fold {fold}, stage {stage}: {source}")]
    Fold {
        fold: usize,
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    pub(crate) fn decode(format: &'static str, message: impl Into<String>) -> Self {
        Error::Decode { format, message: message.into() }
    }

    /// True for solver failures, as opposed to bad input data.
    pub fn is_internal(&self) -> bool {
        match self {
            Error::NonConvergence { .. } => true,
            Error::Fold { source, .. } => source.is_internal(),
            _ => false,
        }
    }
}
