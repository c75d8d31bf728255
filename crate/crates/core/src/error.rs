use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("invalid lottery: {0}")]
    InvalidLottery(String),

    #[error("preferences must be strict for this operation (agent {agent} has ties)")]
    NotStrict { agent: usize },

    #[error("utilities must be binary (0/1) in skip-zero mode; agent {agent}, item {item}")]
    NonBinaryUtilities { agent: usize, item: usize },

    #[error("matrix is not bistochastic: {0}")]
    NotBistochastic(String),

    #[error("seed permutation is inconsistent with the matrix at row {row}")]
    InconsistentSeed { row: usize },

    #[error("row {row} sums to {found}, expected {expected}")]
    RowSum {
        row: usize,
        found: String,
        expected: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("enumeration of {required} allocations exceeds the budget of {budget}")]
    BudgetExceeded { required: String, budget: u64 },

    #[error("agent {agent} is active but has no eligible items")]
    NoEligibleItems { agent: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
}
