use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CboError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("threshold not met for {condition}: need lambda > {threshold}, got {lambda} (deficit {deficit})")]
    ThresholdNotMet {
        condition: String,
        threshold: f64,
        lambda: f64,
        deficit: f64,
    },

    #[error("unsupported objective: {0}")]
    UnsupportedObjective(String),

    #[error("run diverged at t = {t}: particle {particle} has a non-finite coordinate")]
    Diverged { t: f64, particle: usize },
}

pub type Result<T> = std::result::Result<T, CboError>;

pub(crate) fn invalid_param(msg: impl Into<String>) -> CboError {
    CboError::InvalidParameter(msg.into())
}

pub(crate) fn invalid_input(msg: impl Into<String>) -> CboError {
    CboError::InvalidInput(msg.into())
}
