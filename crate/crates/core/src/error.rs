use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate mesh: canonical extent along {axis} is zero")]
    DegenerateMesh { axis: char },
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("empty rendered edge map")]
    EmptyEdgeMap,
    #[error("feature extractor mismatch: {0} vs {1}")]
    ExtractorMismatch(String, String),
    #[error("no non-table anchor candidates")]
    NoAnchorCandidate,
    #[error("stacking cycle: {}", .0.join(" -> "))]
    StackingCycle(Vec<String>),
    #[error("unknown instance id '{0}'")]
    UnknownInstance(String),
    #[error("duplicate instance id '{0}'")]
    DuplicateInstance(String),
    #[error("scene has no table instance")]
    MissingTable,
    #[error("instance ids do not align: {0}")]
    IdMismatch(String),
    #[error("all rotation candidates failed: {}", .0.join("; "))]
    AllCandidatesFailed(Vec<String>),
    #[error("metric '{metric}' failed on view {view}: {reason}")]
    MetricFailure {
        metric: String,
        view: String,
        reason: String,
    },
    #[error("empty scene")]
    EmptyScene,
    #[error("parse error in {context}: {reason}")]
    Parse { context: String, reason: String },
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image codec error: {0}")]
    Image(#[from] ::image::ImageError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            reason: reason.into(),
        }
    }
}
