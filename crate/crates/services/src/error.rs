use std::fmt;
use std::path::PathBuf;

use crate::request::EndpointKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingFixture {
    pub kind: EndpointKind,
    pub digest: String,
}

impl fmt::Display for MissingFixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.digest)
    }
}

fn list(missing: &[MissingFixture]) -> String {
    missing.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("no fixture for {kind} request {digest}")]
    ReplayMiss { kind: EndpointKind, digest: String },
    #[error("{} fixture(s) missing: {}", .0.len(), list(.0))]
    MissingFixtures(Vec<MissingFixture>),
    #[error("transport failure at {provider}: {detail}")]
    Transport {
        provider: String,
        detail: String,
        retriable: bool,
    },
    #[error("no provider configured for {0}")]
    NoProvider(EndpointKind),
    #[error("invalid response for '{instance}': {reason}")]
    Validation { instance: String, reason: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] tablescene::Error),
}

impl ServiceError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ServiceError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(instance: &str, reason: impl Into<String>) -> Self {
        ServiceError::Validation {
            instance: instance.to_string(),
            reason: reason.into(),
        }
    }

    pub fn is_replay_miss(&self) -> bool {
        matches!(
            self,
            ServiceError::ReplayMiss { .. } | ServiceError::MissingFixtures(_)
        )
    }

    pub fn is_retriable(&self) -> bool {
        matches!(self, ServiceError::Transport { retriable: true, .. })
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
