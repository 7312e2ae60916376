//! The 24 axis-aligned orientations of a model's local frame.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::mesh::TriangleMesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SignedAxis {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl SignedAxis {
    pub const ALL: [SignedAxis; 6] = [
        SignedAxis::PosX,
        SignedAxis::NegX,
        SignedAxis::PosY,
        SignedAxis::NegY,
        SignedAxis::PosZ,
        SignedAxis::NegZ,
    ];

    pub fn vector(self) -> Vector3<f64> {
        match self {
            SignedAxis::PosX => Vector3::x(),
            SignedAxis::NegX => -Vector3::x(),
            SignedAxis::PosY => Vector3::y(),
            SignedAxis::NegY => -Vector3::y(),
            SignedAxis::PosZ => Vector3::z(),
            SignedAxis::NegZ => -Vector3::z(),
        }
    }

    fn axis_index(self) -> usize {
        match self {
            SignedAxis::PosX | SignedAxis::NegX => 0,
            SignedAxis::PosY | SignedAxis::NegY => 1,
            SignedAxis::PosZ | SignedAxis::NegZ => 2,
        }
    }

    fn label(self) -> &'static str {
        match self {
            SignedAxis::PosX => "+X",
            SignedAxis::NegX => "-X",
            SignedAxis::PosY => "+Y",
            SignedAxis::NegY => "-Y",
            SignedAxis::PosZ => "+Z",
            SignedAxis::NegZ => "-Z",
        }
    }
}

impl fmt::Display for SignedAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SignedAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "+X" | "X" => Ok(SignedAxis::PosX),
            "-X" => Ok(SignedAxis::NegX),
            "+Y" | "Y" => Ok(SignedAxis::PosY),
            "-Y" => Ok(SignedAxis::NegY),
            "+Z" | "Z" => Ok(SignedAxis::PosZ),
            "-Z" => Ok(SignedAxis::NegZ),
            other => Err(Error::parse("axis", format!("unknown axis '{other}'"))),
        }
    }
}

/// Which local axis of a model points up and which points to the front.
///
/// Canonical frame: up is +Z, front is +Y. Only perpendicular pairs are
/// representable, giving exactly the 24 rotations of the cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UpAxisHint {
    up: SignedAxis,
    front: SignedAxis,
}

impl UpAxisHint {
    pub const IDENTITY: UpAxisHint = UpAxisHint {
        up: SignedAxis::PosZ,
        front: SignedAxis::PosY,
    };

    pub fn new(up: SignedAxis, front: SignedAxis) -> Result<Self> {
        if up.axis_index() == front.axis_index() {
            return Err(Error::InvalidParameter(format!(
                "up {} and front {} are not perpendicular",
                up.label(),
                front.label()
            )));
        }
        Ok(Self { up, front })
    }

    /// Hint with only the up axis known; front picks the smallest
    /// correcting rotation.
    pub fn from_up(up: SignedAxis) -> Self {
        let front = match up {
            SignedAxis::PosZ | SignedAxis::NegZ | SignedAxis::PosX | SignedAxis::NegX => {
                SignedAxis::PosY
            }
            SignedAxis::PosY => SignedAxis::NegZ,
            SignedAxis::NegY => SignedAxis::PosZ,
        };
        Self { up, front }
    }

    pub fn up(&self) -> SignedAxis {
        self.up
    }

    pub fn front(&self) -> SignedAxis {
        self.front
    }

    /// All 24 orientations in a fixed order.
    pub fn all() -> Vec<UpAxisHint> {
        let mut out = Vec::with_capacity(24);
        for up in SignedAxis::ALL {
            for front in SignedAxis::ALL {
                if let Ok(h) = UpAxisHint::new(up, front) {
                    out.push(h);
                }
            }
        }
        out
    }

    /// Rotation taking the hinted local frame to the canonical frame.
    pub fn rotation(&self) -> Matrix3<f64> {
        let up = self.up.vector();
        let front = self.front.vector();
        let right = front.cross(&up);
        // rows: where each canonical axis reads from in local coordinates
        Matrix3::from_rows(&[right.transpose(), front.transpose(), up.transpose()])
    }
}

impl fmt::Display for UpAxisHint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} up, {} front", self.up.label(), self.front.label())
    }
}

impl FromStr for UpAxisHint {
    type Err = Error;

    /// Accepts `"+Y up, -Z front"` or just `"+Y up"` / `"+Y"`.
    fn from_str(s: &str) -> Result<Self> {
        let mut up = None;
        let mut front = None;
        for part in s.split(',') {
            let words: Vec<&str> = part.split_whitespace().collect();
            match words.as_slice() {
                [axis] => up = Some(axis.parse()?),
                [axis, role] if role.eq_ignore_ascii_case("up") => up = Some(axis.parse()?),
                [axis, role] if role.eq_ignore_ascii_case("front") => {
                    front = Some(axis.parse()?)
                }
                _ => return Err(Error::parse("up-axis hint", format!("cannot parse '{s}'"))),
            }
        }
        let up = up.ok_or_else(|| Error::parse("up-axis hint", format!("no up axis in '{s}'")))?;
        match front {
            Some(front) => UpAxisHint::new(up, front),
            None => Ok(UpAxisHint::from_up(up)),
        }
    }
}

impl Serialize for UpAxisHint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for UpAxisHint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Rotates the mesh so its hinted up axis maps to +Z. Pure rotation about
/// the origin.
pub fn canonicalize_up_axis(mesh: &TriangleMesh, hint: UpAxisHint) -> TriangleMesh {
    if hint == UpAxisHint::IDENTITY {
        return mesh.clone();
    }
    let r = hint.rotation();
    mesh.map_vertices(|p| nalgebra::Point3::from(r * p.coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    #[test]
    fn there_are_24_proper_rotations() {
        let all = UpAxisHint::all();
        assert_eq!(all.len(), 24);
        for h in &all {
            let r = h.rotation();
            assert!((r.determinant() - 1.0).abs() < 1e-12, "{h}");
            assert!((r * r.transpose() - Matrix3::identity()).norm() < 1e-12);
            assert_eq!(r * h.up().vector(), Vector3::z());
            assert_eq!(r * h.front().vector(), Vector3::y());
        }
    }

    #[test]
    fn identity_hint_leaves_vertices() {
        let m = TriangleMesh::cuboid(Point3::new(-1.0, 0.0, 2.0), Point3::new(3.0, 1.0, 5.0));
        let hint: UpAxisHint = "+Z up, +Y front".parse().unwrap();
        assert_eq!(canonicalize_up_axis(&m, hint), m);
        let twice = canonicalize_up_axis(&canonicalize_up_axis(&m, hint), hint);
        assert_eq!(twice, canonicalize_up_axis(&m, hint));
    }

    #[test]
    fn y_up_maps_unit_y_to_unit_z() {
        let hint: UpAxisHint = "+Y up".parse().unwrap();
        let r = hint.rotation();
        let v = r * Vector3::new(0.0, 1.0, 0.0);
        assert!((v - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn labels_round_trip() {
        for h in UpAxisHint::all() {
            assert_eq!(h.to_string().parse::<UpAxisHint>().unwrap(), h);
        }
        assert!("+Y up, -Y front".parse::<UpAxisHint>().is_err());
        assert!("sideways".parse::<UpAxisHint>().is_err());
    }
}
