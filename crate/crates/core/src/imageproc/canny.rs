use serde::{Deserialize, Serialize};

use crate::image::GrayImage;
use crate::raster::sobel_gradients;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CannyParams {
    pub sigma: f64,
    /// Fractions of the maximum gradient magnitude.
    pub low_ratio: f64,
    pub high_ratio: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            low_ratio: 0.1,
            high_ratio: 0.2,
        }
    }
}

/// Canny edges of a grayscale mask; output pixels are 0.0 or 1.0.
pub fn canny_edges(mask: &GrayImage, params: &CannyParams) -> GrayImage {
    let (w, h) = mask.dims();
    // Centering on 0.5 makes the pipeline exactly odd-symmetric, so a mask
    // and its complement produce bit-identical magnitudes.
    let centered = mask.map(|v| v - 0.5);
    let smooth = gaussian_blur(&centered, params.sigma);
    let (gx, gy) = sobel_gradients(&smooth);
    let mag: Vec<f64> = gx
        .data()
        .iter()
        .zip(gy.data())
        .map(|(a, b)| (a * a + b * b).sqrt())
        .collect();
    let max = mag.iter().copied().fold(0.0, f64::max);
    let mut out = GrayImage::new(w, h);
    if max <= 1e-12 {
        return out;
    }

    // non-maximum suppression along the quantized gradient direction
    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    let tan22 = (22.5f64).to_radians().tan();
    let mut thin = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let (ax, ay) = (gx.data()[i].abs(), gy.data()[i].abs());
            let (dx, dy): (isize, isize) = if ay <= ax * tan22 {
                (1, 0)
            } else if ax <= ay * tan22 {
                (0, 1)
            } else if (gx.data()[i] > 0.0) == (gy.data()[i] > 0.0) {
                (1, 1)
            } else {
                (1, -1)
            };
            let (xi, yi) = (x as isize, y as isize);
            let a = at(xi + dx, yi + dy);
            let b = at(xi - dx, yi - dy);
            // ties broken toward the forward neighbour so plateaus stay one pixel wide
            if m > a && m >= b {
                thin[i] = m;
            }
        }
    }

    // hysteresis
    let high = params.high_ratio * max;
    let low = params.low_ratio * max;
    let mut stack: Vec<usize> = Vec::new();
    let mut keep = vec![false; w * h];
    for i in 0..w * h {
        if thin[i] >= high && !keep[i] {
            keep[i] = true;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (jx, jy) = ((j % w) as isize, (j / w) as isize);
                for ny in jy - 1..=jy + 1 {
                    for nx in jx - 1..=jx + 1 {
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let k = ny as usize * w + nx as usize;
                        if !keep[k] && thin[k] >= low {
                            keep[k] = true;
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }
    for (o, k) in out.data_mut().iter_mut().zip(keep) {
        if k {
            *o = 1.0;
        }
    }
    out
}

/// Separable Gaussian blur with clamp-to-edge borders; radius = ceil(3σ).
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    if sigma <= 0.0 {
        return img.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = raw.iter().sum();
    let kernel: Vec<f64> = raw.iter().map(|k| k / norm).collect();
    let (w, h) = img.dims();
    let horiz = GrayImage::from_fn(w, h, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, wk)| wk * img.get_clamped(x as isize + k as isize - radius, y as isize))
            .sum()
    });
    GrayImage::from_fn(w, h, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, wk)| wk * horiz.get_clamped(x as isize, y as isize + k as isize - radius))
            .sum()
    })
}
