//! Exact Euclidean distance transform (lower envelope of parabolas, run once
//! over columns and once over rows).

use crate::image::GrayImage;

/// Per-pixel Euclidean distance (pixels) to the nearest edge pixel.
///
/// When the edge set is empty every value is `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    field: GrayImage,
}

impl DistanceField {
    pub fn width(&self) -> usize {
        self.field.width()
    }

    pub fn height(&self) -> usize {
        self.field.height()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.field.get(x, y)
    }

    pub fn as_image(&self) -> &GrayImage {
        &self.field
    }

    pub fn is_empty_source(&self) -> bool {
        self.field.data().iter().all(|v| v.is_infinite())
    }
}

/// Distance transform of a binary image; pixels `> 0.5` are edges.
pub fn distance_transform(edges: &GrayImage) -> DistanceField {
    let (w, h) = edges.dims();
    let sites: Vec<bool> = edges.data().iter().map(|&v| v > 0.5).collect();
    let sq = squared_edt(&sites, w, h);
    let field = GrayImage::from_vec(w, h, sq.into_iter().map(f64::sqrt).collect())
        .expect("dims preserved");
    DistanceField { field }
}

/// Squared Euclidean distance to the nearest `true` site. Values are exact
/// integers (as f64) or `INFINITY` when no site exists.
pub fn squared_edt(sites: &[bool], width: usize, height: usize) -> Vec<f64> {
    squared_edt_within(sites, width, height, f64::INFINITY)
}

/// [`squared_edt`] where every value above `max_d2` is reported as
/// `INFINITY`. Values at or below `max_d2` are exact.
pub fn squared_edt_within(sites: &[bool], width: usize, height: usize, max_d2: f64) -> Vec<f64> {
    assert_eq!(sites.len(), width * height);
    // Phase 1: vertical distance to the nearest site in the same column, by a
    // downward then upward sweep carried in row order.
    let mut grid = vec![f64::INFINITY; width * height];
    let mut run = vec![f64::INFINITY; width];
    for (src, dst) in sites.chunks_exact(width).zip(grid.chunks_exact_mut(width)) {
        for ((r, &s), d) in run.iter_mut().zip(src).zip(dst.iter_mut()) {
            *r = if s { 0.0 } else { *r + 1.0 };
            *d = *r;
        }
    }
    run.iter_mut().for_each(|r| *r = f64::INFINITY);
    for (src, dst) in sites
        .chunks_exact(width)
        .zip(grid.chunks_exact_mut(width))
        .rev()
    {
        for ((r, &s), d) in run.iter_mut().zip(src).zip(dst.iter_mut()) {
            *r = if s { 0.0 } else { *r + 1.0 };
            let v = d.min(*r);
            let sq = v * v;
            // a parabola whose apex is above the cap cannot produce a value
            // at or below it
            *d = if sq > max_d2 { f64::INFINITY } else { sq };
        }
    }
    // Phase 2: lower envelope of parabolas along each row.
    let mut scratch = Scratch::new(width);
    let mut line = vec![0.0; width];
    for row in grid.chunks_exact_mut(width) {
        if row.iter().all(|v| v.is_infinite()) {
            continue;
        }
        line.copy_from_slice(row);
        scratch.transform(&line, row);
        if max_d2.is_finite() {
            row.iter_mut()
                .filter(|v| **v > max_d2)
                .for_each(|v| *v = f64::INFINITY);
        }
    }
    grid
}

struct Scratch {
    /// Parabola vertex positions.
    vertices: Vec<f64>,
    /// `f(p) + p²` at each vertex.
    heights: Vec<f64>,
    bounds: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            vertices: vec![0.0; n],
            heights: vec![0.0; n],
            bounds: vec![0.0; n + 1],
        }
    }

    /// 1D squared distance transform of sampled function `f`; infinite
    /// samples never become parabola vertices.
    fn transform(&mut self, f: &[f64], out: &mut [f64]) {
        let v = &mut self.vertices;
        let hv = &mut self.heights;
        let z = &mut self.bounds;
        // k = number of parabolas in the envelope
        let mut k = 0usize;
        for (q, &fq) in f.iter().enumerate() {
            if fq == f64::INFINITY {
                continue;
            }
            let qf = q as f64;
            let hq = fq + qf * qf;
            let mut s = f64::NEG_INFINITY;
            while k > 0 {
                s = (hq - hv[k - 1]) / (2.0 * (qf - v[k - 1]));
                if s > z[k - 1] {
                    break;
                }
                k -= 1;
            }
            if k == 0 {
                s = f64::NEG_INFINITY;
            }
            v[k] = qf;
            hv[k] = hq;
            z[k] = s;
            k += 1;
        }
        if k == 0 {
            out.iter_mut().for_each(|o| *o = f64::INFINITY);
            return;
        }
        z[k] = f64::INFINITY;
        let mut j = 0usize;
        for (q, o) in out.iter_mut().enumerate() {
            let qf = q as f64;
            while z[j + 1] < qf {
                j += 1;
            }
            let d = qf - v[j];
            *o = d * d + (hv[j] - v[j] * v[j]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(N·E) scan over every edge pixel.
    fn brute_force(edges: &GrayImage) -> GrayImage {
        let pts: Vec<(usize, usize)> = (0..edges.height())
            .flat_map(|y| (0..edges.width()).map(move |x| (x, y)))
            .filter(|&(x, y)| edges.get(x, y) > 0.5)
            .collect();
        GrayImage::from_fn(edges.width(), edges.height(), |x, y| {
            pts.iter()
                .map(|&(ex, ey)| {
                    let dx = x as f64 - ex as f64;
                    let dy = y as f64 - ey as f64;
                    (dx * dx + dy * dy).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
    }

    fn random_edges(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> GrayImage {
        let data = (0..w * h)
            .map(|_| if rng.gen_bool(density) { 1.0 } else { 0.0 })
            .collect();
        GrayImage::from_vec(w, h, data).unwrap()
    }

    #[test]
    fn all_edges_gives_zero() {
        let df = distance_transform(&GrayImage::filled(9, 4, 1.0));
        assert!(df.as_image().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn three_four_five() {
        let mut e = GrayImage::new(10, 10);
        e.set(0, 0, 1.0);
        assert_eq!(distance_transform(&e).get(3, 4), 5.0);
    }

    #[test]
    fn empty_edge_set_is_infinite() {
        let df = distance_transform(&GrayImage::new(6, 3));
        assert!(df.is_empty_source());
    }

    #[test]
    fn matches_brute_force_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (w, h) in [(64, 64), (17, 40), (1, 30), (30, 1)] {
            for density in [0.001, 0.01, 0.2] {
                let e = random_edges(&mut rng, w, h, density);
                assert_eq!(distance_transform(&e).as_image(), &brute_force(&e));
            }
        }
    }

    #[test]
    fn monotone_under_edge_growth_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut e = random_edges(&mut rng, 40, 40, 0.01);
        let before = distance_transform(&e);
        assert_eq!(before, distance_transform(&e));
        e.set(rng.gen_range(0..40), rng.gen_range(0..40), 1.0);
        let after = distance_transform(&e);
        for (a, b) in after.as_image().data().iter().zip(before.as_image().data()) {
            assert!(a <= b);
        }
    }
}
