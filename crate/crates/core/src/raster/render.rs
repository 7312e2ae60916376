//! Software rasterizer producing the three matching channels: soft
//! silhouette, Sobel edge map of that silhouette, and flat albedo color.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::camera::{Camera, View};
use super::crop::CropWindow;
use super::sobel_edge_map;
use crate::error::{Error, Result};
use crate::geometry::{yaw_rotation, TriangleMesh};
use crate::image::{GrayImage, RgbImage};
use crate::imageproc::squared_edt_within;

pub const DEFAULT_SOFTNESS: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Framing {
    /// The full camera image.
    #[default]
    Full,
    /// Square window tightly enclosing the projected mesh, resampled to the
    /// camera's image size. Equivalent to tight-crop-and-resize of a render
    /// at unlimited resolution.
    TightSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub softness: f64,
    pub background: [f64; 3],
    pub framing: Framing,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            softness: DEFAULT_SOFTNESS,
            background: [0.0; 3],
            framing: Framing::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutputs {
    pub silhouette: GrayImage,
    pub edge_map: GrayImage,
    pub color: RgbImage,
    /// Region of the full camera image covered by these buffers.
    pub window: CropWindow,
}

impl RenderOutputs {
    /// Hard coverage recovered from the silhouette (covered pixels are
    /// exactly those above 0.5).
    pub fn coverage_mask(&self) -> GrayImage {
        self.silhouette.map(|v| if v > 0.5 { 1.0 } else { 0.0 })
    }

    pub fn is_empty(&self) -> bool {
        self.silhouette.data().iter().all(|&v| v <= 0.5)
    }
}

/// Renders the full camera frame with default background.
pub fn render(
    mesh: &TriangleMesh,
    camera: &Camera,
    yaw_deg: f64,
    softness: f64,
) -> Result<RenderOutputs> {
    render_with(
        mesh,
        camera,
        yaw_deg,
        &RenderOptions {
            softness,
            ..RenderOptions::default()
        },
    )
}

#[derive(Clone, Copy)]
struct ScreenVertex {
    x: f64,
    y: f64,
    inv_z: f64,
    /// color premultiplied by 1/z for perspective-correct interpolation
    color_iz: [f64; 3],
}

struct CamVertex {
    p: Vector3<f64>,
    color: [f64; 3],
}

/// Yaw is applied about the vertical axis through the mesh's AABB center,
/// which is also where the camera looks.
pub fn render_with(
    mesh: &TriangleMesh,
    camera: &Camera,
    yaw_deg: f64,
    opts: &RenderOptions,
) -> Result<RenderOutputs> {
    camera.validate()?;
    if !(opts.softness > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "softness {} must be positive",
            opts.softness
        )));
    }
    if mesh.triangles().is_empty() {
        return Err(Error::InvalidMesh("mesh has no triangles".into()));
    }
    let subject = mesh.aabb();
    let view = camera.view(&subject);
    let pivot = subject.center();
    let rot = yaw_rotation(yaw_deg);
    let cam: Vec<CamVertex> = mesh
        .vertices()
        .iter()
        .zip(mesh.colors())
        .map(|(v, c)| {
            let local = Vector3::new(v.x - pivot.x, v.y - pivot.y, v.z);
            let r = rot * local;
            let world = Point3::new(r.x + pivot.x, r.y + pivot.y, r.z);
            CamVertex {
                p: view.to_camera(&world),
                color: *c,
            }
        })
        .collect();

    let tris = clip_and_project(mesh, &cam, &view);
    let n = camera.image_size;
    let full = CropWindow {
        x0: 0.0,
        y0: 0.0,
        side: n as f64,
    };
    let window = match opts.framing {
        Framing::Full => full,
        Framing::TightSquare => match tight_window(&tris) {
            Some(w) => w,
            None => return Ok(empty_outputs(n, opts.background, full)),
        },
    };
    let scale = n as f64 / window.side;
    let to_window = |v: &ScreenVertex| ScreenVertex {
        x: (v.x - window.x0) * scale,
        y: (v.y - window.y0) * scale,
        ..*v
    };

    let mut covered = vec![false; n * n];
    let mut depth = vec![0.0f64; n * n];
    let mut color = RgbImage::filled(n, n, opts.background);
    for t in &tris {
        let [a, b, c] = [to_window(&t[0]), to_window(&t[1]), to_window(&t[2])];
        raster_triangle(&a, &b, &c, n, &mut covered, &mut depth, &mut color);
    }

    let silhouette = soft_silhouette(&covered, n, opts.softness);
    let edge_map = sobel_edge_map(&silhouette);
    Ok(RenderOutputs {
        silhouette,
        edge_map,
        color,
        window,
    })
}

fn empty_outputs(n: usize, background: [f64; 3], window: CropWindow) -> RenderOutputs {
    RenderOutputs {
        silhouette: GrayImage::new(n, n),
        edge_map: GrayImage::new(n, n),
        color: RgbImage::filled(n, n, background),
        window,
    }
}

fn tight_window(tris: &[[ScreenVertex; 3]]) -> Option<CropWindow> {
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in tris.iter().flatten() {
        x0 = x0.min(v.x);
        y0 = y0.min(v.y);
        x1 = x1.max(v.x);
        y1 = y1.max(v.y);
    }
    let w = CropWindow::around(x0, y0, x1, y1);
    (w.side.is_finite() && w.side > 1e-9).then_some(w)
}

/// Clips each triangle against the near plane and projects to pixels.
fn clip_and_project(mesh: &TriangleMesh, cam: &[CamVertex], view: &View) -> Vec<[ScreenVertex; 3]> {
    let near = view.near;
    let mut out = Vec::with_capacity(mesh.triangles().len());
    let project = |p: &Vector3<f64>, c: &[f64; 3]| -> ScreenVertex {
        let (x, y) = view.project(p);
        let iz = 1.0 / p.z;
        ScreenVertex {
            x,
            y,
            inv_z: iz,
            color_iz: [c[0] * iz, c[1] * iz, c[2] * iz],
        }
    };
    for t in mesh.triangles() {
        let vs = [&cam[t[0] as usize], &cam[t[1] as usize], &cam[t[2] as usize]];
        let inside = vs.iter().filter(|v| v.p.z >= near).count();
        if inside == 3 {
            out.push([
                project(&vs[0].p, &vs[0].color),
                project(&vs[1].p, &vs[1].color),
                project(&vs[2].p, &vs[2].color),
            ]);
            continue;
        }
        if inside == 0 {
            continue;
        }
        // Sutherland–Hodgman against z = near
        let mut poly: Vec<(Vector3<f64>, [f64; 3])> = Vec::with_capacity(4);
        for i in 0..3 {
            let a = vs[i];
            let b = vs[(i + 1) % 3];
            let a_in = a.p.z >= near;
            let b_in = b.p.z >= near;
            if a_in {
                poly.push((a.p, a.color));
            }
            if a_in != b_in {
                let s = (near - a.p.z) / (b.p.z - a.p.z);
                let p = a.p + (b.p - a.p) * s;
                let c = [
                    a.color[0] + (b.color[0] - a.color[0]) * s,
                    a.color[1] + (b.color[1] - a.color[1]) * s,
                    a.color[2] + (b.color[2] - a.color[2]) * s,
                ];
                poly.push((p, c));
            }
        }
        for k in 1..poly.len().saturating_sub(1) {
            out.push([
                project(&poly[0].0, &poly[0].1),
                project(&poly[k].0, &poly[k].1),
                project(&poly[k + 1].0, &poly[k + 1].1),
            ]);
        }
    }
    out
}

#[inline]
fn edge(a: &ScreenVertex, b: &ScreenVertex, px: f64, py: f64) -> f64 {
    (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
}

/// Pixel-center sampling with inclusive edges; nearest depth wins.
fn raster_triangle(
    a: &ScreenVertex,
    b: &ScreenVertex,
    c: &ScreenVertex,
    n: usize,
    covered: &mut [bool],
    depth: &mut [f64],
    color: &mut RgbImage,
) {
    let area = edge(a, b, c.x, c.y);
    if area.abs() < 1e-12 || !area.is_finite() {
        return;
    }
    let min_x = a.x.min(b.x).min(c.x);
    let max_x = a.x.max(b.x).max(c.x);
    let min_y = a.y.min(b.y).min(c.y);
    let max_y = a.y.max(b.y).max(c.y);
    let nf = n as f64;
    if max_x < 0.0 || max_y < 0.0 || min_x > nf || min_y > nf {
        return;
    }
    let x_lo = (min_x - 0.5).ceil().max(0.0) as usize;
    let x_hi = ((max_x - 0.5).floor()).min(nf - 1.0);
    let y_lo = (min_y - 0.5).ceil().max(0.0) as usize;
    let y_hi = ((max_y - 0.5).floor()).min(nf - 1.0);
    if x_hi < 0.0 || y_hi < 0.0 {
        return;
    }
    let (x_hi, y_hi) = (x_hi as usize, y_hi as usize);
    let inv_area = 1.0 / area;
    let data = color.data_mut();
    // Edge functions are affine in x along a row. The analytic span is widened
    // by a pixel and every candidate still gets the exact inside test.
    let coeffs = [(b, c), (c, a), (a, b)].map(|(p, q)| -(q.y - p.y) * inv_area);
    for py in y_lo..=y_hi {
        let cy = py as f64 + 0.5;
        let (mut lo, mut hi) = (x_lo as f64, x_hi as f64);
        for (k, (p, q)) in [(b, c), (c, a), (a, b)].into_iter().enumerate() {
            let slope = coeffs[k];
            let at0 = edge(p, q, 0.0, cy) * inv_area;
            if slope > 0.0 {
                lo = lo.max((-at0 / slope - 0.5).floor() - 1.0);
            } else if slope < 0.0 {
                hi = hi.min((-at0 / slope - 0.5).ceil() + 1.0);
            } else if at0 < 0.0 {
                hi = -1.0;
            }
        }
        if !(lo <= hi) {
            continue;
        }
        let (lo, hi) = (lo.max(x_lo as f64) as usize, hi.min(x_hi as f64) as usize);
        for px in lo..=hi {
            let cx = px as f64 + 0.5;
            let w0 = edge(b, c, cx, cy) * inv_area;
            let w1 = edge(c, a, cx, cy) * inv_area;
            let w2 = edge(a, b, cx, cy) * inv_area;
            if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                continue;
            }
            let i = py * n + px;
            covered[i] = true;
            let iz = w0 * a.inv_z + w1 * b.inv_z + w2 * c.inv_z;
            if iz > depth[i] {
                depth[i] = iz;
                let z = 1.0 / iz;
                let mut rgb = [0.0; 3];
                for (k, v) in rgb.iter_mut().enumerate() {
                    *v = ((w0 * a.color_iz[k] + w1 * b.color_iz[k] + w2 * c.color_iz[k]) * z)
                        .clamp(0.0, 1.0);
                }
                data[i] = rgb;
            }
        }
    }
}

/// Logistic of a signed pixel distance to the silhouette boundary.
///
/// Boundary pixels are covered pixels with an uncovered 4-neighbour. The
/// nearest covered pixel to any uncovered one is always a boundary pixel, so
/// outside values use that exact distance minus half a pixel; inside values
/// use the negated distance plus half a pixel. Covered pixels therefore map
/// above 0.5 and uncovered ones below.
fn soft_silhouette(covered: &[bool], n: usize, softness: f64) -> GrayImage {
    if !covered.iter().any(|&c| c) {
        return GrayImage::new(n, n);
    }
    let mut boundary = vec![false; n * n];
    for y in 0..n {
        for x in 0..n {
            let i = y * n + x;
            boundary[i] = covered[i]
                && ((x > 0 && !covered[i - 1])
                    || (x + 1 < n && !covered[i + 1])
                    || (y > 0 && !covered[i - n])
                    || (y + 1 < n && !covered[i + n]));
        }
    }
    // Squared distances are integers, so the logistic is tabulated up to the
    // saturation radius; nothing past it needs an exact distance.
    let logistic = |sd: f64| {
        let t = sd / softness;
        if t > 40.0 {
            0.0
        } else if t < -40.0 {
            1.0
        } else {
            1.0 / (1.0 + t.exp())
        }
    };
    let limit = (40.0 * softness + 0.5).powi(2).ceil() as usize + 1;
    let d2 = squared_edt_within(&boundary, n, n, limit as f64);
    let outside: Vec<f64> = (0..=limit).map(|k| logistic((k as f64).sqrt() - 0.5)).collect();
    let inside: Vec<f64> = (0..=limit).map(|k| logistic(-(k as f64).sqrt() - 0.5)).collect();
    let data = covered
        .iter()
        .zip(&d2)
        .map(|(&c, &d)| {
            let (table, far) = if c { (&inside, 1.0) } else { (&outside, 0.0) };
            // beyond the table the logistic has saturated
            if d <= limit as f64 {
                table[d as usize]
            } else {
                far
            }
        })
        .collect();
    GrayImage::from_vec(n, n, data).expect("n*n")
}
