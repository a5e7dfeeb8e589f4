use thiserror::Error;

use crate::geometry::VertexId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed text input. `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),

    #[error("invalid instance: {0}")]
    Input(String),

    #[error("scenario generation failed: {0}")]
    Generation(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
