use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pruning toolkit.
#[derive(Debug, Error)]
pub enum FameError {
    /// A byte-level format could not be decoded.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// A line-oriented text format could not be decoded.
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl FameError {
    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        FameError::Parse {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn line(line: usize, message: impl Into<String>) -> Self {
        FameError::Line {
            line,
            message: message.into(),
        }
    }

    /// Attaches the offending path to an I/O error.
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        FameError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by the data.
    pub fn is_io(&self) -> bool {
        matches!(self, FameError::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, FameError>;
