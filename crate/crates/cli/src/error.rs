use std::path::PathBuf;

use tablescene_services::ServiceError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_REPLAY_MISS: i32 = 3;
pub const EXIT_STAGE_FAILURE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("{0}")]
    ReplayMiss(ServiceError),
    #[error("stage '{stage}' failed{}: {reason}", .instance.as_ref().map(|i| format!(" on '{i}'")).unwrap_or_default())]
    Stage {
        stage: String,
        instance: Option<String>,
        reason: String,
    },
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::ReplayMiss(_) => EXIT_REPLAY_MISS,
            CliError::Stage { .. } | CliError::Io { .. } => EXIT_STAGE_FAILURE,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn stage(stage: &str, instance: Option<&str>, reason: impl ToString) -> Self {
        CliError::Stage {
            stage: stage.to_string(),
            instance: instance.map(str::to_string),
            reason: reason.to_string(),
        }
    }

    /// Service errors keep their replay-miss classification; anything else
    /// is a failure of `stage`.
    pub fn from_service(stage: &str, instance: Option<&str>, e: ServiceError) -> Self {
        if e.is_replay_miss() {
            CliError::ReplayMiss(e)
        } else {
            CliError::stage(stage, instance, e)
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
