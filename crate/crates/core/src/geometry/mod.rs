//! Meshes, transforms, bounding volumes and canonical-frame handling.
//!
//! World and canonical frames are +Z up. In the tabletop frame the origin is
//! the table center, +X points to the viewer's left and +Y toward the viewer.

mod io;
mod mesh;
mod orientation;
mod transform;

pub use io::{glb_meshes_by_name, load_mesh, parse_glb, parse_obj, save_mesh, write_glb, write_obj};
pub use mesh::{Aabb, TriangleMesh, DEFAULT_ALBEDO};
pub use orientation::{canonicalize_up_axis, SignedAxis, UpAxisHint};
pub use transform::{
    apply_transform, footprint_dims, normalize_yaw, yaw_rotation, RigidScaleTransform,
};

use nalgebra::Vector3;

/// An upright model ready for yaw-only placement.
///
/// The mesh is translated so its AABB bottom-center sits at the origin; a
/// placement translation therefore gives the world position of that point.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalModel {
    name: String,
    mesh: TriangleMesh,
}

impl CanonicalModel {
    pub fn new(name: impl Into<String>, mesh: &TriangleMesh) -> Self {
        let b = mesh.aabb();
        let pivot = Vector3::new(
            0.5 * (b.min.x + b.max.x),
            0.5 * (b.min.y + b.max.y),
            b.min.z,
        );
        Self {
            name: name.into(),
            mesh: mesh.map_vertices(|p| p - pivot),
        }
    }

    /// Up-axis correction followed by pivot normalization.
    pub fn from_hinted(name: impl Into<String>, mesh: &TriangleMesh, hint: UpAxisHint) -> Self {
        Self::new(name, &canonicalize_up_axis(mesh, hint))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn extents(&self) -> Vector3<f64> {
        self.mesh.aabb().extents()
    }
}
