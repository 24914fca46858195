use thiserror::Error;

/// Errors produced by the planning pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("grid has no free cells: {0}")]
    EmptyGrid(String),

    #[error("inconsistent state: {0}")]
    InconsistentState(String),

    #[error("no candidate left: every point is excluded")]
    EmptyCandidates,

    #[error("mission validation failed: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
