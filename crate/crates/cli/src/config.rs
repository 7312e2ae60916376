use std::path::Path;

use serde::{Deserialize, Serialize};
use tablescene::dro::DroConfig;
use tablescene::evalharness::SweepConfig;
use tablescene::imageproc::CannyParams;
use tablescene::tsa::TsaConfig;
use tablescene_services::ProviderConfig;

use crate::error::{CliError, CliResult};

/// Everything that can change results. Worker count is deliberately absent:
/// it must not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dro: DroConfig,
    pub canny: CannyParams,
    pub tsa: TsaConfig,
    pub sweep: SweepConfig,
    pub assemble: AssembleConfig,
    pub services: ProviderConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssembleConfig {
    /// Run the overlap-resolution pass after assembly.
    pub resolve_overlaps: bool,
    pub max_resolve_iters: usize,
}

impl Default for AssembleConfig {
    fn default() -> Self {
        Self {
            resolve_overlaps: false,
            max_resolve_iters: 50,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.dro
            .validate()
            .and_then(|_| self.sweep.validate())
            .map_err(|e| CliError::Validation(e.to_string()))
    }
}
