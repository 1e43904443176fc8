use thiserror::Error;

pub type Result<T, E = StatsError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {min} values, got {len}")]
    TooShort { len: usize, min: usize },

    #[error("correlation undefined: zero variance input")]
    ZeroVariance,

    #[error("empty sample")]
    Empty,

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("sessions {0} and {1} do not cover the same items")]
    ItemSetMismatch(String, String),

    #[error("malformed input: {0}")]
    Malformed(String),
}
