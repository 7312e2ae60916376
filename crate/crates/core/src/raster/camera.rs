use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;

pub const DEFAULT_FOV_DEG: f64 = 40.0;
pub const DEFAULT_IMAGE_SIZE: usize = 256;

/// Orbit camera around a subject.
///
/// Azimuth 0 places the camera on the +Y side looking toward -Y, so world +X
/// appears on the left of the image. Elevation 90 looks straight down.
/// `distance` is in multiples of the subject radius (half the AABB diagonal).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub distance: f64,
    pub fov_deg: f64,
    pub image_size: usize,
    /// Look-at override; defaults to the subject's AABB center.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub look_at: Option<Point3<f64>>,
}

impl Default for Camera {
    fn default() -> Self {
        Self {
            azimuth_deg: 0.0,
            elevation_deg: 30.0,
            distance: 3.0,
            fov_deg: DEFAULT_FOV_DEG,
            image_size: DEFAULT_IMAGE_SIZE,
            look_at: None,
        }
    }
}

impl Camera {
    pub fn new(azimuth_deg: f64, elevation_deg: f64, distance: f64) -> Self {
        Self {
            azimuth_deg,
            elevation_deg,
            distance,
            ..Self::default()
        }
    }

    pub fn with_image_size(mut self, size: usize) -> Self {
        self.image_size = size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=90.0).contains(&self.elevation_deg) {
            return Err(Error::InvalidCamera(format!(
                "elevation {} outside [0, 90]",
                self.elevation_deg
            )));
        }
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(Error::InvalidCamera(format!(
                "distance {} must be positive",
                self.distance
            )));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::InvalidCamera(format!("fov {} out of range", self.fov_deg)));
        }
        if self.image_size < 16 {
            return Err(Error::InvalidCamera(format!(
                "image size {} below 16",
                self.image_size
            )));
        }
        if !self.azimuth_deg.is_finite() {
            return Err(Error::InvalidCamera("non-finite azimuth".into()));
        }
        Ok(())
    }

    /// Resolves the camera against a subject bounding box.
    pub(crate) fn view(&self, subject: &Aabb) -> View {
        let target = self.look_at.unwrap_or_else(|| subject.center());
        let radius = subject.radius().max(1e-9);
        let (sa, ca) = self.azimuth_deg.to_radians().sin_cos();
        let (se, ce) = self.elevation_deg.to_radians().sin_cos();
        let dir = Vector3::new(-sa * ce, ca * ce, se);
        let eye = target + dir * (self.distance * radius);
        let forward = -dir;
        let right = Vector3::new(-ca, -sa, 0.0);
        let up = right.cross(&forward);
        let focal = 0.5 * self.image_size as f64 / (0.5 * self.fov_deg.to_radians()).tan();
        View {
            eye,
            right,
            up,
            forward,
            focal,
            size: self.image_size,
            near: 1e-3 * radius,
        }
    }
}

/// Resolved pinhole view: world → camera → pixel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct View {
    eye: Point3<f64>,
    right: Vector3<f64>,
    up: Vector3<f64>,
    forward: Vector3<f64>,
    pub focal: f64,
    pub size: usize,
    pub near: f64,
}

impl View {
    /// Camera-space coordinates: (right, up, depth).
    #[inline]
    #[allow(clippy::wrong_self_convention)]
    pub fn to_camera(&self, p: &Point3<f64>) -> Vector3<f64> {
        let d = p - self.eye;
        Vector3::new(d.dot(&self.right), d.dot(&self.up), d.dot(&self.forward))
    }

    /// Continuous pixel coordinates (x right, y down) of a camera-space point
    /// in front of the camera.
    #[inline]
    pub fn project(&self, c: &Vector3<f64>) -> (f64, f64) {
        let half = 0.5 * self.size as f64;
        (
            half + self.focal * c.x / c.z,
            half - self.focal * c.y / c.z,
        )
    }
}
