use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the pipeline.
///
/// The variants are grouped by the exit status the command-line front end
/// maps them to: missing inputs, configuration problems, and everything
/// else (data and invariant failures).
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("column {column}: malformed alignment pair {token:?}")]
    AlignmentParse { column: usize, token: String },

    #[error("range error: {0}")]
    Range(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid action sequence at position {position}: {message}")]
    Structure { position: usize, message: String },

    #[error("shape mismatch in sentence {sentence}: {message}")]
    Shape { sentence: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// Process exit status for this error: 2 for a missing input, 3 for a
    /// configuration/validation failure, 4 for any data or invariant failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingInput(_) => 2,
            Error::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => 2,
            Error::Config(_) => 3,
            _ => 4,
        }
    }
}
