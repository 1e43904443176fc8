use thiserror::Error;

use crate::rating::ItemId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid pair: item {0} compared with itself")]
    SelfComparison(ItemId),

    #[error("invalid outcome {0}: must be exactly 0, 0.5 or 1")]
    InvalidOutcome(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("duplicate item id {0}")]
    DuplicateItem(ItemId),

    #[error("unknown item id {0}")]
    UnknownItem(ItemId),

    #[error("missing prior score for item {0}")]
    MissingPrior(ItemId),

    #[error("a query is already pending")]
    QueryPending,

    #[error("stale or unknown query id {0}")]
    StaleQuery(u64),

    #[error("session budget exhausted")]
    BudgetExhausted,

    #[error("event log out of order: expected step {expected}, found {found}")]
    OutOfOrder { expected: u64, found: u64 },

    #[error("malformed event log: {0}")]
    MalformedLog(String),
}
