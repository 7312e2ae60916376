use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{GrayImage, RgbImage};

pub const CROP_SIZE: usize = 256;

/// Square window in continuous source-pixel coordinates (pixel `i` spans
/// `[i, i+1)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropWindow {
    pub x0: f64,
    pub y0: f64,
    pub side: f64,
}

impl CropWindow {
    /// Square window centered on the given box, side = longer box side.
    pub fn around(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        let side = (x_max - x_min).max(y_max - y_min);
        let cx = 0.5 * (x_min + x_max);
        let cy = 0.5 * (y_min + y_max);
        Self {
            x0: cx - 0.5 * side,
            y0: cy - 0.5 * side,
            side,
        }
    }

    /// Tight square window around the mask's foreground (`>= 0.5`) pixels.
    pub fn from_mask(mask: &GrayImage) -> Result<Self> {
        let (mut x_min, mut y_min) = (usize::MAX, usize::MAX);
        let (mut x_max, mut y_max) = (0usize, 0usize);
        for y in 0..mask.height() {
            for x in 0..mask.width() {
                if mask.get(x, y) >= 0.5 {
                    x_min = x_min.min(x);
                    y_min = y_min.min(y);
                    x_max = x_max.max(x);
                    y_max = y_max.max(y);
                }
            }
        }
        if x_min == usize::MAX {
            return Err(Error::EmptyMask);
        }
        Ok(Self::around(
            x_min as f64,
            y_min as f64,
            (x_max + 1) as f64,
            (y_max + 1) as f64,
        ))
    }

    /// Source coordinate (pixel-index space) sampled by output pixel `i`.
    #[inline]
    fn source(&self, origin: f64, i: usize, out: usize) -> f64 {
        origin + (i as f64 + 0.5) * self.side / out as f64 - 0.5
    }

    pub fn resample_gray(&self, img: &GrayImage, out: usize) -> GrayImage {
        GrayImage::from_fn(out, out, |i, j| {
            bilinear(
                img.width(),
                img.height(),
                self.source(self.x0, i, out),
                self.source(self.y0, j, out),
                |x, y| img.get(x, y),
                0.0,
            )
        })
    }

    pub fn resample_rgb(&self, img: &RgbImage, out: usize) -> RgbImage {
        RgbImage::from_fn(out, out, |i, j| {
            let sx = self.source(self.x0, i, out);
            let sy = self.source(self.y0, j, out);
            let mut px = [0.0; 3];
            for (c, p) in px.iter_mut().enumerate() {
                *p = bilinear(img.width(), img.height(), sx, sy, |x, y| img.get(x, y)[c], 0.0);
            }
            px
        })
    }
}

/// Bilinear sample; taps outside the image read `outside`.
fn bilinear(
    w: usize,
    h: usize,
    sx: f64,
    sy: f64,
    get: impl Fn(usize, usize) -> f64,
    outside: f64,
) -> f64 {
    let fx = sx.floor();
    let fy = sy.floor();
    let tx = sx - fx;
    let ty = sy - fy;
    let tap = |x: f64, y: f64| -> f64 {
        if x < 0.0 || y < 0.0 || x >= w as f64 || y >= h as f64 {
            outside
        } else {
            get(x as usize, y as usize)
        }
    };
    let mut acc = 0.0;
    for (dy, wy) in [(0.0, 1.0 - ty), (1.0, ty)] {
        for (dx, wx) in [(0.0, 1.0 - tx), (1.0, tx)] {
            let wgt = wx * wy;
            if wgt != 0.0 {
                acc += wgt * tap(fx + dx, fy + dy);
            }
        }
    }
    acc
}

/// Crops a grayscale image to the mask's tight square bounds and resizes to
/// `out_size`². Returns the window so paired images can reuse it.
pub fn tight_crop_resize_gray(
    image: &GrayImage,
    mask: &GrayImage,
    out_size: usize,
) -> Result<(GrayImage, CropWindow)> {
    image.ensure_same_dims(mask)?;
    let win = CropWindow::from_mask(mask)?;
    Ok((win.resample_gray(image, out_size), win))
}

pub fn tight_crop_resize_rgb(
    image: &RgbImage,
    mask: &GrayImage,
    out_size: usize,
) -> Result<(RgbImage, CropWindow)> {
    if image.dims() != mask.dims() {
        let (a, b) = image.dims();
        return Err(Error::DimensionMismatch(a, b, mask.width(), mask.height()));
    }
    let win = CropWindow::from_mask(mask)?;
    Ok((win.resample_rgb(image, out_size), win))
}
