use std::path::PathBuf;

use crate::ids::{StationId, TaskTypeId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("no profile entry for task type {task_type} at station {station}")]
    UnknownPair {
        task_type: TaskTypeId,
        station: StationId,
    },

    #[error("unknown station {0}")]
    UnknownStation(StationId),

    #[error("unknown task type {0}")]
    UnknownTaskType(TaskTypeId),

    #[error("invalid configuration at `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("config file {path} not found")]
    ConfigNotFound { path: PathBuf },

    #[error("failed to parse config {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("malformed workload trace at line {line}: {reason}")]
    Trace { line: usize, reason: String },

    #[error("unknown policy `{0}` (expected one of bp, mect, mc, nr)")]
    UnknownPolicy(String),

    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
