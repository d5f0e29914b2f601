use adequa_autodiff::AutodiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("token index {index} out of range for vocabulary of size {size}")]
    InvalidToken { index: usize, size: usize },

    #[error("reward {value} outside [0, 1]")]
    RewardOutOfRange { value: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;

pub(crate) fn contract(msg: impl Into<String>) -> CoreError {
    CoreError::Contract(msg.into())
}
