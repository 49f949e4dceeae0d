//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by the CLI to choose an exit status
/// (input problems exit 2, numerical problems exit 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: malformed record: {reason}")]
    MalformedRecord { context: String, reason: String },

    #[error("{context}: unknown vote string {value:?}")]
    UnknownVoteString { context: String, value: String },

    #[error("duplicate vote for voter {voter:?} on bill {bill:?}")]
    DuplicateVote { voter: String, bill: String },

    #[error("unknown group {group:?}")]
    UnknownGroup { group: String },

    #[error("dataset needs at least two groups, found {found}")]
    TooFewGroups { found: usize },

    #[error("cleaning removed everything: {voters} voters and {bills} bills remain")]
    EmptyAfterCleaning { voters: usize, bills: usize },

    #[error("column {id:?} has zero variance and cannot be standardized")]
    ZeroVarianceColumn { id: String },

    #[error("k = {k} exceeds min(m, n) = {max}")]
    KTooLarge { k: usize, max: usize },

    #[error("k = {k} exceeds the numerical rank {rank}")]
    RankDeficient { k: usize, rank: usize },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("matrix is identically zero")]
    ZeroMatrix,

    #[error("residual exhausted after {extracted} of {requested} components")]
    DeflationExhausted { extracted: usize, requested: usize },

    #[error("oracle budget exceeded: n = {n}, p = {p} (limits: n <= 12, p <= 4)")]
    BudgetExceeded { n: usize, p: usize },

    #[error("group {group:?} has {size} members; at least 2 are required")]
    GroupTooSmall { group: String, size: usize },

    #[error("covariance for group {group:?} is singular (lambda = 0)")]
    SingularCovariance { group: String },

    #[error("invalid group permutation: {reason}")]
    InvalidPermutation { reason: String },

    #[error("group order mismatch: {reason}")]
    OrderMismatch { reason: String },

    #[error("voter {voter:?} not found")]
    VoterNotFound { voter: String },

    #[error("invalid parameter: {reason}")]
    InvalidParameter { reason: String },

    #[error("config error: {reason}")]
    Config { reason: String },

    #[error("linear algebra backend failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Which exit-status class this error belongs to.
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            MalformedRecord { .. }
            | UnknownVoteString { .. }
            | DuplicateVote { .. }
            | UnknownGroup { .. }
            | TooFewGroups { .. }
            | EmptyAfterCleaning { .. }
            | ZeroVarianceColumn { .. }
            | GroupTooSmall { .. }
            | InvalidPermutation { .. }
            | VoterNotFound { .. }
            | InvalidParameter { .. }
            | Config { .. }
            | Io(_)
            | Csv(_)
            | Json(_) => ErrorClass::Input,
            KTooLarge { .. }
            | RankDeficient { .. }
            | DimensionMismatch { .. }
            | ZeroMatrix
            | DeflationExhausted { .. }
            | BudgetExceeded { .. }
            | SingularCovariance { .. }
            | OrderMismatch { .. }
            | Linalg(_) => ErrorClass::Numeric,
        }
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
