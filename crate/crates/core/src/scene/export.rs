//! Layout JSON (centimeters and degrees) plus a merged GLB for viewers.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{assemble, ModelSpec, Pose, SceneLayout};
use crate::error::{Error, Result};
use crate::geometry::{write_glb, CanonicalModel, RigidScaleTransform};
use crate::jsonfmt::to_stable_string;

pub const LAYOUT_SCHEMA: &str = "tablescene.layout/1";

const M_TO_CM: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutUnits {
    pub length: String,
    pub angle: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutInstance {
    pub id: String,
    pub label: String,
    pub mesh: String,
    pub is_table: bool,
    pub yaw_deg: f64,
    /// World position of the model's bottom-center pivot.
    pub translation_cm: [f64; 3],
    /// World extents of the unrotated model.
    pub scale_cm: [f64; 3],
    /// Instances this one rests on.
    pub supports: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutDocument {
    pub schema: String,
    pub units: LayoutUnits,
    pub table_id: String,
    pub surface_height_cm: f64,
    /// In scene order.
    pub instances: Vec<LayoutInstance>,
}

impl LayoutDocument {
    pub fn from_scene(scene: &SceneLayout) -> Self {
        let cm = |v: Vector3<f64>| [v.x * M_TO_CM, v.y * M_TO_CM, v.z * M_TO_CM];
        Self {
            schema: LAYOUT_SCHEMA.to_string(),
            units: LayoutUnits {
                length: "cm".into(),
                angle: "deg".into(),
            },
            table_id: scene.table_id().to_string(),
            surface_height_cm: scene.surface_height * M_TO_CM,
            instances: scene
                .instances()
                .iter()
                .map(|i| LayoutInstance {
                    id: i.id.clone(),
                    label: i.label.clone(),
                    mesh: i.mesh_ref.clone(),
                    is_table: i.is_table,
                    yaw_deg: i.transform.yaw_deg(),
                    translation_cm: cm(i.transform.translation()),
                    scale_cm: cm(i.transform.scale()),
                    supports: i.supports.clone(),
                })
                .collect(),
        }
    }
}

/// Byte-stable layout JSON.
pub fn layout_json(scene: &SceneLayout) -> Result<String> {
    to_stable_string(&LayoutDocument::from_scene(scene))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportPaths {
    pub layout: PathBuf,
    pub glb: PathBuf,
}

/// Writes `layout.json` and `scene.glb` into `dir` (created if missing).
/// GLB nodes are named by instance id.
pub fn export_scene(scene: &SceneLayout, dir: &Path) -> Result<ExportPaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = ExportPaths {
        layout: dir.join("layout.json"),
        glb: dir.join("scene.glb"),
    };
    let json = layout_json(scene)?;
    std::fs::write(&paths.layout, json).map_err(|e| Error::io(&paths.layout, e))?;
    let named: Vec<(&str, &_)> = scene
        .instances()
        .iter()
        .map(|i| (i.id.as_str(), &i.world))
        .collect();
    let glb = write_glb(&named)?;
    std::fs::write(&paths.glb, glb).map_err(|e| Error::io(&paths.glb, e))?;
    Ok(paths)
}

/// Rebuilds a scene from layout JSON; `load` supplies the canonical model
/// for each instance (typically by resolving its mesh reference).
pub fn import_layout(
    text: &str,
    mut load: impl FnMut(&LayoutInstance) -> Result<CanonicalModel>,
) -> Result<SceneLayout> {
    let doc: LayoutDocument = serde_json::from_str(text)?;
    if doc.schema != LAYOUT_SCHEMA {
        return Err(Error::parse(
            "layout",
            format!("unsupported schema '{}'", doc.schema),
        ));
    }
    let m = |v: [f64; 3]| Vector3::new(v[0], v[1], v[2]) / M_TO_CM;
    let mut specs = Vec::with_capacity(doc.instances.len());
    let mut poses = Vec::with_capacity(doc.instances.len());
    for inst in &doc.instances {
        specs.push(ModelSpec {
            id: inst.id.clone(),
            label: inst.label.clone(),
            mesh_ref: inst.mesh.clone(),
            model: Arc::new(load(inst)?),
        });
        poses.push(Pose {
            id: inst.id.clone(),
            transform: RigidScaleTransform::new(
                inst.yaw_deg,
                m(inst.translation_cm),
                m(inst.scale_cm),
            )?,
            supports: inst.supports.clone(),
        });
    }
    assemble(&doc.table_id, &specs, &poses)
}
