use std::path::PathBuf;

use cbo_core::CboError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("threshold condition unmet in strict mode: {0}")]
    Strict(String),

    #[error(transparent)]
    Core(#[from] CboError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),

    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl HarnessError {
    /// Whether the error belongs to the "configuration" class (exit status 2).
    pub fn is_config(&self) -> bool {
        match self {
            HarnessError::Config(_) | HarnessError::Strict(_) | HarnessError::Parse { .. } => true,
            HarnessError::Core(e) => matches!(
                e,
                CboError::InvalidParameter(_) | CboError::ThresholdNotMet { .. } | CboError::UnsupportedObjective(_)
            ),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// An input file that cannot be read counts as a configuration error.
    pub(crate) fn unreadable(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Parse {
            path: path.to_path_buf(),
            message: format!("cannot read file: {source}"),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}
