use thiserror::Error;

pub type Result<T, E = PriorError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PriorError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("cannot encode image: {0}")]
    Encode(String),
    #[error("provider unavailable: every one of {attempts} requests failed (last error: {last})")]
    ProviderUnavailable { attempts: usize, last: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
