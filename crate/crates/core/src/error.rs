use thiserror::Error;

/// Errors raised by the library. Violations of allocation validity are not
/// errors; see [`crate::model::validate_allocation`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("utilities do not fit in a 64-bit integer representation: {bits} bits required")]
    Capacity { bits: u64 },

    #[error("invalid instance: {0}")]
    Validation(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("search budget exhausted after {explored} allocations")]
    BudgetExceeded { explored: u64 },

    #[error("external solver: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
