use thiserror::Error;

/// Error categories. Callers that drive a process map these onto exit codes:
/// invalid input is a usage problem, resource limits are deliberate guards on
/// problem size, numeric failures mean a computation could not meet its
/// tolerance or had no solution in range.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what}: requested {requested} exceeds limit {limit}")]
    ResourceLimit {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("no solution: {0}")]
    NoSolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;
