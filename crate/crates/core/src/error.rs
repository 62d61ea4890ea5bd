use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("tensor is not symmetric: entry {first:?} differs from entry {second:?}")]
    NotSymmetric {
        first: Vec<usize>,
        second: Vec<usize>,
    },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("instance too large for exhaustive verification: {columns} columns (limit {limit})")]
    TooLarge { columns: usize, limit: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid schedule: {0}")]
    Schedule(#[from] crate::sim::ScheduleError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
