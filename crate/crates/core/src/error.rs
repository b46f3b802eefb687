use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("operators do not commute: {0}")]
    NotCommuting(String),
    #[error("index out of range: {0}")]
    InvalidIndex(String),
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid correlation table: {0}")]
    InvalidTable(String),
    #[error("table carries no raw counts")]
    MissingCounts,
    #[error("inequality is trivial in this parameter regime: {0}")]
    TrivialRegime(String),
    #[error("classical and quantum bounds coincide")]
    DegenerateBounds,
    #[error("problem is infeasible: {0}")]
    Infeasible(String),
    #[error("problem is unbounded: {0}")]
    Unbounded(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("data are not informationally complete: {0}")]
    IncompleteData(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
