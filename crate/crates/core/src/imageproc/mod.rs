//! Binary-image utilities feeding the edge loss.

mod canny;
mod distance;

pub use canny::{canny_edges, gaussian_blur, CannyParams};
pub use distance::{distance_transform, squared_edt, squared_edt_within, DistanceField};
