//! Run manifest (byte-stable) and timing log (not stable, kept apart).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tablescene::jsonfmt::to_stable_string;

use crate::bundle::sha256_file;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMING_FILE: &str = "timing.json";

/// Pipeline order; manifest stages are listed in this order.
pub const STAGES: [&str; 6] = ["canonicalize", "dro", "tsa", "assemble", "evaluate", "swap"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRef {
    /// Relative to the run directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub status: StageStatus,
    pub outputs: Vec<OutputRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_instance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestInputs {
    pub bundle: String,
    pub reference: String,
    pub fixtures: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub inputs: ManifestInputs,
    pub mode: String,
    pub config: RunConfig,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn new(inputs: ManifestInputs, mode: String, config: RunConfig) -> Self {
        Self {
            schema: "tablescene.manifest/1".into(),
            inputs,
            mode,
            config,
            stages: BTreeMap::new(),
        }
    }

    /// Loads the manifest of `run_dir` if present.
    pub fn load(run_dir: &Path) -> CliResult<Option<Self>> {
        let path = run_dir.join(MANIFEST_FILE);
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(CliError::io(path, e)),
        }
    }

    pub fn save(&self, run_dir: &Path) -> CliResult<()> {
        let text = to_stable_string(self).map_err(|e| CliError::stage("manifest", None, e))?;
        write_file(&run_dir.join(MANIFEST_FILE), text.as_bytes())
    }

    /// Records a stage result. Outputs merge by path with an earlier record
    /// of the same stage, so single-instance reruns keep the rest.
    pub fn record(&mut self, stage: &str, mut rec: StageRecord) {
        if let Some(prev) = self.stages.get(stage) {
            for o in &prev.outputs {
                if !rec.outputs.iter().any(|n| n.path == o.path) {
                    rec.outputs.push(o.clone());
                }
            }
        }
        rec.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        self.stages.insert(stage.to_string(), rec);
    }
}

/// Wall-clock seconds per stage and instance. Never compared across runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub jobs: usize,
    pub stages: BTreeMap<String, BTreeMap<String, f64>>,
}

impl Timing {
    pub fn load_or_default(run_dir: &Path) -> Self {
        std::fs::read_to_string(run_dir.join(TIMING_FILE))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_default()
    }

    pub fn add(&mut self, stage: &str, key: &str, secs: f64) {
        self.stages
            .entry(stage.to_string())
            .or_default()
            .insert(key.to_string(), secs);
    }

    pub fn save(&self, run_dir: &Path) -> CliResult<()> {
        let text = to_stable_string(self).map_err(|e| CliError::stage("timing", None, e))?;
        write_file(&run_dir.join(TIMING_FILE), text.as_bytes())
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Output reference for a file under `run_dir`.
pub fn output_ref(run_dir: &Path, path: &Path) -> CliResult<OutputRef> {
    let rel: PathBuf = path.strip_prefix(run_dir).unwrap_or(path).to_path_buf();
    Ok(OutputRef {
        path: rel.to_string_lossy().replace('\\', "/"),
        sha256: sha256_file(path)?,
    })
}
