//! Rank correlations, inter-session agreement and resampling tests for
//! comparing ranking sessions.

pub mod agreement;
pub mod correlation;
pub mod difficulty;
pub mod error;
pub mod resampling;

pub use agreement::{agreement_matrix, AgreementMatrix, Metric, PairCorrelation, SessionRanking};
pub use correlation::{average_ranks, kendall_tau, pearson_r, spearman_rho};
pub use difficulty::{difficulty_bins, pair_agreements, DifficultyBins, PairKey};
pub use error::{Result, StatsError};
pub use resampling::{
    cliffs_delta, cliffs_delta_ci, compare, paired_bootstrap_diff, permutation_test, BootstrapDiff, CliffsDelta,
    ComparisonReport, Interval,
};
