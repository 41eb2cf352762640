use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty sentence at index {0}")]
    EmptySentence(usize),

    #[error("invalid token id {id} (vocabulary size {size})")]
    InvalidToken { id: u32, size: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: reference has {reference} sentences, hypothesis has {hypothesis}")]
    LengthMismatch { reference: usize, hypothesis: usize },

    #[error("trigger pair ({s}, {t}) diverged during training")]
    DivergentTrigger { s: u32, t: u32 },

    #[error("feature {0} diverged during iterative scaling")]
    DivergentFeature(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
