//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by matrix operations, solvers, and data ingestion.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes are incompatible for the requested operation.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A parameter is out of its valid range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input entry was NaN, +inf, or an unexpected -inf.
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    /// A matrix has numerical rank above the requested factorization rank.
    #[error("infeasible rank: numerical rank {rank} exceeds requested bound {bound}")]
    InfeasibleRank { rank: usize, bound: usize },

    /// A text input failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn non_finite(msg: impl Into<String>) -> Self {
        Error::NonFiniteInput(msg.into())
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
