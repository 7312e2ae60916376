//! Instance bundle: the on-disk inputs of one scene.
//!
//! ```text
//! scene.json            manifest of the bundle (this module's schema)
//! reference.png         the input photo (used by evaluate)
//! topview_boxes.json    top-view boxes, pixels
//! meshes/<id>.obj       per-instance meshes, any up axis
//! crops/<id>.png        per-instance crop (objects only)
//! masks/<id>.png        per-instance mask (objects only)
//! fixtures/             service fixture store
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tablescene::tsa::TopViewBox;

use crate::error::{CliError, CliResult};

pub const BUNDLE_SCHEMA: &str = "tablescene.bundle/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleInstance {
    pub id: String,
    pub label: String,
    pub mesh: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub schema: String,
    pub scene: String,
    pub table_id: String,
    pub reference: String,
    pub topview: String,
    pub boxes: String,
    pub fixtures: String,
    pub instances: Vec<BundleInstance>,
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub root: PathBuf,
    pub manifest: BundleManifest,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Bundle {
    pub fn load(root: &Path) -> CliResult<Self> {
        let path = root.join("scene.json");
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CliError::Validation(format!("cannot read bundle {}: {e}", path.display()))
        })?;
        let manifest: BundleManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let b = Self {
            root: root.to_path_buf(),
            manifest,
        };
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> CliResult<()> {
        let m = &self.manifest;
        let bad = |msg: String| Err(CliError::Validation(format!("bundle: {msg}")));
        if m.schema != BUNDLE_SCHEMA {
            return bad(format!("unsupported schema '{}'", m.schema));
        }
        let mut ids = BTreeSet::new();
        for inst in &m.instances {
            if !ids.insert(inst.id.as_str()) {
                return bad(format!("duplicate instance '{}'", inst.id));
            }
            let is_table = inst.id == m.table_id;
            if !is_table && (inst.crop.is_none() || inst.mask.is_none()) {
                return bad(format!("instance '{}' lacks crop or mask", inst.id));
            }
            let mut files = vec![&inst.mesh];
            files.extend(inst.crop.iter().chain(inst.mask.iter()));
            for f in files {
                if !self.path(f).is_file() {
                    return bad(format!("missing file {f}"));
                }
            }
        }
        if !ids.contains(m.table_id.as_str()) {
            return bad(format!("table '{}' is not an instance", m.table_id));
        }
        for f in [&m.reference, &m.boxes] {
            if !self.path(f).is_file() {
                return bad(format!("missing file {f}"));
            }
        }
        Ok(())
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn table_id(&self) -> &str {
        &self.manifest.table_id
    }

    pub fn ids(&self) -> Vec<String> {
        self.manifest.instances.iter().map(|i| i.id.clone()).collect()
    }

    pub fn instance(&self, id: &str) -> CliResult<&BundleInstance> {
        self.manifest
            .instances
            .iter()
            .find(|i| i.id == id)
            .ok_or_else(|| CliError::Validation(format!("unknown instance '{id}'")))
    }

    /// Non-table instances, in bundle order.
    pub fn objects(&self) -> impl Iterator<Item = &BundleInstance> {
        self.manifest
            .instances
            .iter()
            .filter(|i| i.id != self.manifest.table_id)
    }

    pub fn boxes(&self) -> CliResult<Vec<TopViewBox>> {
        let path = self.path(&self.manifest.boxes);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn fixtures_dir(&self) -> PathBuf {
        self.path(&self.manifest.fixtures)
    }
}
