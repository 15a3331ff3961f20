use thiserror::Error;

use crate::maximizer::MaxReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// The requested accuracy cannot be certified at the working precision.
    #[error("precision error: {0}")]
    Precision(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("node budget of {budget} exhausted before the enclosure reached the requested width")]
    BudgetExhausted { budget: u64, best: Box<MaxReport> },

    #[error("integer overflow: {0}")]
    Overflow(String),

    /// A proven sign or structural law was contradicted by a computation.
    #[error("internal consistency failure: {0}")]
    Consistency(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn precision(msg: impl Into<String>) -> Self {
        Error::Precision(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
