use pairank_core::ItemId;
use thiserror::Error;

pub type Result<T, E = SimError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("item {0} is not part of the ground truth")]
    UnknownItem(ItemId),
    #[error("unknown hypothesis {0:?} (expected h1..h5)")]
    UnknownHypothesis(String),
    #[error(transparent)]
    Core(#[from] pairank_core::Error),
    #[error(transparent)]
    Prior(#[from] pairank_prior::PriorError),
    #[error(transparent)]
    Stats(#[from] pairank_stats::StatsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
