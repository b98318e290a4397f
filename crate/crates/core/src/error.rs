use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps [`Error::PrecisionExhausted`] and [`Error::BudgetExhausted`] to
/// exit code 2 and everything else to exit code 1.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("precision exhausted after {bits} bits: {context}")]
    PrecisionExhausted { bits: u32, context: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("certificate rejected: {0}")]
    Certificate(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    /// True for the "ran out of resources" family, as opposed to bad input.
    pub fn is_exhaustion(&self) -> bool {
        matches!(self, Error::PrecisionExhausted { .. } | Error::BudgetExhausted(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
