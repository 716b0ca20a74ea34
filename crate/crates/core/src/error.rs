use thiserror::Error;

pub type Result<T> = std::result::Result<T, OdrpoError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdrpoError {
    #[error("invalid reward scale: {0}")]
    InvalidScale(String),

    #[error("group too small: need at least {min} rollouts, got {got}")]
    GroupTooSmall { min: usize, got: usize },

    #[error("reward {value} is not a level of the scale")]
    RewardOffScale { value: f64 },

    #[error("level index {index} outside 1..={k}")]
    LevelOutOfRange { index: usize, k: usize },

    #[error("group mean {mean} too small for mean normalization")]
    MeanTooSmall { mean: f64 },

    #[error("enumeration of {size} cells exceeds the limit of {limit}")]
    TooLarge { size: u128, limit: u128 },

    #[error("degenerate score matrix: every rater gives all responses the same score")]
    DegenerateMatrix,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl OdrpoError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        OdrpoError::InvalidArgument(msg.into())
    }
}
