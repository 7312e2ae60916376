use nalgebra::{Point3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::mesh::TriangleMesh;
use crate::error::{Error, Result};

/// Normalizes an angle in degrees into `[0, 360)`.
///
/// The result is snapped to 1e-9° so that `θ` and `θ + 360` map to the same
/// bits.
pub fn normalize_yaw(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    let snapped = (r * 1e9).round() / 1e9;
    if snapped >= 360.0 {
        0.0
    } else {
        snapped
    }
}

/// Yaw about +Z, then translation; `scale` holds target world extents of the
/// canonical mesh's AABB (before yaw).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidScaleTransform {
    yaw_deg: f64,
    translation: Vector3<f64>,
    scale: Vector3<f64>,
}

impl RigidScaleTransform {
    pub fn new(yaw_deg: f64, translation: Vector3<f64>, scale: Vector3<f64>) -> Result<Self> {
        if !scale.iter().all(|&s| s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale components must be positive, got {scale:?}"
            )));
        }
        if !yaw_deg.is_finite() || !translation.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidParameter("non-finite transform".into()));
        }
        Ok(Self {
            yaw_deg: normalize_yaw(yaw_deg),
            translation,
            scale,
        })
    }

    pub fn yaw_deg(&self) -> f64 {
        self.yaw_deg
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.translation
    }

    pub fn scale(&self) -> Vector3<f64> {
        self.scale
    }

    pub fn with_translation(mut self, t: Vector3<f64>) -> Self {
        self.translation = t;
        self
    }
}

/// Yaw rotation about +Z (counter-clockwise seen from above).
pub fn yaw_rotation(yaw_deg: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), normalize_yaw(yaw_deg).to_radians())
}

/// Scale to `xf.scale` extents, yaw, then translate. Scaling is about the
/// origin, so canonical models are expected to have their pivot there.
pub fn apply_transform(mesh: &TriangleMesh, xf: &RigidScaleTransform) -> Result<TriangleMesh> {
    let extents = mesh.aabb().extents();
    for (k, axis) in ['x', 'y', 'z'].into_iter().enumerate() {
        if extents[k] <= 0.0 {
            return Err(Error::DegenerateMesh { axis });
        }
    }
    let ratio = xf.scale.component_div(&extents);
    let rot = yaw_rotation(xf.yaw_deg);
    let t = xf.translation;
    Ok(mesh.map_vertices(|p| {
        let scaled = p.coords.component_mul(&ratio);
        Point3::from(rot * scaled + t)
    }))
}

/// Axis-aligned extents of a `w × d` rectangle after yawing by `yaw_deg`.
pub fn footprint_dims(width: f64, depth: f64, yaw_deg: f64) -> (f64, f64) {
    let (s, c) = yaw_deg.to_radians().sin_cos();
    (
        (width * c).abs() + (depth * s).abs(),
        (width * s).abs() + (depth * c).abs(),
    )
}
