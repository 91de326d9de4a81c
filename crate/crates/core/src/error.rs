use thiserror::Error;

/// Errors produced by the library.
///
/// The CLI maps these onto process exit codes (see [`Error::exit_code`]).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        budget: u128,
    },

    /// A verified inequality or structural assertion failed. This is never a
    /// user error; it means a certified statement did not hold.
    #[error("assertion failed: {0}")]
    AssertionFailed(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn assertion(msg: impl Into<String>) -> Self {
        Error::AssertionFailed(msg.into())
    }

    /// Process exit code used by the `uqf` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Domain(_) | Error::Parse(_) => 2,
            Error::SearchExhausted(_) | Error::BudgetExceeded { .. } => 3,
            Error::AssertionFailed(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
