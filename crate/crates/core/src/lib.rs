//! Budgeted active pairwise ranking: a Glicko-scale rating engine with
//! adaptive volatility, an uncertainty-aware acquisition function and an
//! event-sourced session that ties them together.

pub mod acquisition;
pub mod error;
pub mod rating;
pub mod session;

pub use acquisition::{AcquisitionParams, AutoPolicy, CandidatePair, Strategy};
pub use error::{Error, Result};
pub use rating::{ItemId, ItemState, Outcome, RatingParams};
pub use session::{
    Choice, Judgment, LogEntry, NextQuery, PriorMode, Progress, Query, RankedItem, RankingConfig, RatingEngine,
    Session, SessionHeader, Source,
};
