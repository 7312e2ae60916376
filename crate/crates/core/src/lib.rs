//! Deterministic recovery of per-instance rotation, translation and metric
//! scale for tabletop scenes, plus scene assembly, collision metrics and the
//! camera-sweep evaluation protocol.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: triangle meshes, transforms, up-axis canonicalisation, mesh IO.
//! * [`raster`]: software rasterizer producing soft silhouettes, edge maps and color.
//! * [`imageproc`]: Canny edges and the exact Euclidean distance transform.
//! * [`losses`]: silhouette / edge / appearance losses and feature extractors.
//! * [`dro`]: rotation search (coarse grid + moment-based refinement).
//! * [`tsa`]: anchor selection, meters-per-pixel scale, placement and stacking.
//! * [`scene`]: assembly, collision detection, metrics, editing and export.
//! * [`evalharness`]: camera sweep and best-view selection.
//!
//! Data-parallel loops go through [`exec::Exec`]; with the `parallel` feature
//! disabled every path runs sequentially.

// Validation uses `!(x > 0.0)` on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dro;
pub mod error;
pub mod evalharness;
pub mod exec;
pub mod geometry;
pub mod image;
pub mod imageproc;
pub mod jsonfmt;
pub mod losses;
pub mod raster;
pub mod scene;
pub mod tsa;

pub use error::{Error, Result};
pub use exec::Exec;
