use std::path::PathBuf;

use slambench_core::api::ApiError;
use slambench_core::datafile::DatafileError;
use slambench_core::metrics::MetricsError;

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("invalid run specification: {0}")]
    InvalidSpec(String),
    #[error("datafile {path}: {source}")]
    Datafile {
        path: PathBuf,
        #[source]
        source: DatafileError,
    },
    #[error("{algorithm}: {source}")]
    Algorithm {
        algorithm: String,
        #[source]
        source: ApiError,
    },
    #[error("parameter override: {0}")]
    Override(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("no sample has both objectives")]
    NoValidSamples,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report format: {0}")]
    Format(String),
}

impl RunnerError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunnerError::Io { path: path.into(), source }
    }
}
