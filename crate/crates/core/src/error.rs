use thiserror::Error;

/// Errors raised by network evaluation, the builders and the trainer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QnnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("root finding failed for degree {degree} polynomial (residual {residual:e})")]
    Factorization { degree: usize, residual: f64 },

    #[error("all {restarts} training restarts diverged")]
    Diverged { restarts: usize },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, QnnError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(QnnError::InvalidInput(msg.into()))
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(QnnError::DimensionMismatch { expected, got })
    }
}
