//! Command-line orchestration of the layout pipeline: instance bundles,
//! per-stage runners, run manifests and the bundled demo scene.

pub mod bundle;
pub mod config;
pub mod demo;
pub mod error;
pub mod manifest;
pub mod stages;

pub use error::{CliError, CliResult, EXIT_OK, EXIT_REPLAY_MISS, EXIT_STAGE_FAILURE, EXIT_VALIDATION};
