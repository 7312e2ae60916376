//! Software perspective rasterizer, Sobel filtering and crop contracts.

mod camera;
mod crop;
mod render;

pub use camera::{Camera, DEFAULT_FOV_DEG, DEFAULT_IMAGE_SIZE};
pub use crop::{tight_crop_resize_gray, tight_crop_resize_rgb, CropWindow, CROP_SIZE};
pub use render::{render, render_with, Framing, RenderOptions, RenderOutputs, DEFAULT_SOFTNESS};

use crate::image::GrayImage;

/// Horizontal and vertical 3×3 Sobel responses with clamp-replicated borders.
pub fn sobel_gradients(img: &GrayImage) -> (GrayImage, GrayImage) {
    let (w, h) = img.dims();
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    if w > 0 && h > 0 {
        let d = img.data();
        let mut cols = [0usize; 3];
        for y in 0..h {
            let rows = [y.saturating_sub(1), y, (y + 1).min(h - 1)].map(|r| r * w);
            for x in 0..w {
                cols[0] = x.saturating_sub(1);
                cols[1] = x;
                cols[2] = (x + 1).min(w - 1);
                let p = |c: usize, r: usize| d[rows[r] + cols[c]];
                gx[y * w + x] = (p(2, 0) + 2.0 * p(2, 1) + p(2, 2)) - (p(0, 0) + 2.0 * p(0, 1) + p(0, 2));
                gy[y * w + x] = (p(0, 2) + 2.0 * p(1, 2) + p(2, 2)) - (p(0, 0) + 2.0 * p(1, 0) + p(2, 0));
            }
        }
    }
    (
        GrayImage::from_vec(w, h, gx).expect("same dims"),
        GrayImage::from_vec(w, h, gy).expect("same dims"),
    )
}

/// Gradient magnitude `sqrt(gx² + gy²)`.
pub fn sobel_edge_map(img: &GrayImage) -> GrayImage {
    let (w, h) = img.dims();
    let d = img.data();
    let mut out = vec![0.0; w * h];
    if w < 3 || h < 3 {
        let (gx, gy) = sobel_gradients(img);
        for ((o, a), b) in out.iter_mut().zip(gx.data()).zip(gy.data()) {
            *o = (a * a + b * b).sqrt();
        }
        return GrayImage::from_vec(w, h, out).expect("same dims");
    }
    for y in 0..h {
        let r0 = &d[y.saturating_sub(1) * w..][..w];
        let r1 = &d[y * w..][..w];
        let r2 = &d[(y + 1).min(h - 1) * w..][..w];
        let o = &mut out[y * w..][..w];
        let px = |x0: usize, x: usize, x2: usize| {
            let gx = (r0[x2] + 2.0 * r1[x2] + r2[x2]) - (r0[x0] + 2.0 * r1[x0] + r2[x0]);
            let gy = (r2[x0] + 2.0 * r2[x] + r2[x2]) - (r0[x0] + 2.0 * r0[x] + r0[x2]);
            (gx * gx + gy * gy).sqrt()
        };
        o[0] = px(0, 0, 1);
        o[w - 1] = px(w - 2, w - 1, w - 1);
        for (((a, b), c), dst) in r0
            .windows(3)
            .zip(r1.windows(3))
            .zip(r2.windows(3))
            .zip(&mut o[1..w - 1])
        {
            let gx = (a[2] + 2.0 * b[2] + c[2]) - (a[0] + 2.0 * b[0] + c[0]);
            let gy = (c[0] + 2.0 * c[1] + c[2]) - (a[0] + 2.0 * a[1] + a[2]);
            *dst = (gx * gx + gy * gy).sqrt();
        }
    }
    GrayImage::from_vec(w, h, out).expect("same dims")
}
