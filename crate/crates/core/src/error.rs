use thiserror::Error;

/// Errors raised by the estimation, bootstrap and testing routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HlError {
    #[error("sample too small: need at least {needed} observations, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("non-finite input value {value} at index {index}")]
    NonFiniteInput { index: usize, value: f64 },

    #[error("rank {k} out of range 1..={count}")]
    RankOutOfRange { k: u64, count: u64 },

    #[error("degenerate bootstrap subsample of size {size}")]
    DegenerateSubsample { size: usize },

    #[error("replicate {replicate} exceeded {max_redraws} weight redraws")]
    TooManyRedraws { replicate: usize, max_redraws: usize },

    #[error("bootstrap distribution is empty")]
    EmptyDistribution,

    #[error("invalid p-value {value} at index {index}")]
    InvalidPValue { index: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl HlError {
    /// True for errors caused by the numbers themselves rather than by how
    /// the routine was called.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            HlError::DegenerateSubsample { .. } | HlError::TooManyRedraws { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, HlError>;
