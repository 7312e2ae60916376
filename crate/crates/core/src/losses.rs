//! Tri-modal rotation loss: soft-IoU silhouette term, one-sided Chamfer edge
//! term over a distance field, and squared feature distance for appearance.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{GrayImage, RgbImage};
use crate::imageproc::{canny_edges, distance_transform, CannyParams, DistanceField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_s: f64,
    pub lambda_e: f64,
    pub lambda_a: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_s: 0.5,
            lambda_e: 0.5,
            lambda_a: 2.0,
        }
    }
}

impl LossWeights {
    pub fn new(lambda_s: f64, lambda_e: f64, lambda_a: f64) -> Result<Self> {
        let w = Self {
            lambda_s,
            lambda_e,
            lambda_a,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.lambda_s, self.lambda_e, self.lambda_a];
        if ws.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || ws.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidParameter(format!(
                "loss weights must be nonnegative with one positive: {ws:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub extractor: String,
    pub values: Vec<f64>,
}

/// Appearance descriptor Φ. Must be deterministic.
#[allow(clippy::len_without_is_empty)]
pub trait FeatureExtractor: Send + Sync {
    fn name(&self) -> &str;
    fn len(&self) -> usize;
    fn extract(&self, image: &RgbImage) -> Result<FeatureVector>;
}

/// Three-level pyramid of RGB patch means (16², 8², 4² grids → 1008 values),
/// L2-normalized.
#[derive(Debug, Clone, Copy, Default)]
pub struct PatchMeanExtractor;

impl PatchMeanExtractor {
    pub const NAME: &'static str = "patch-mean-pyramid-v1";
    const GRIDS: [usize; 3] = [16, 8, 4];
}

impl FeatureExtractor for PatchMeanExtractor {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn len(&self) -> usize {
        Self::GRIDS.iter().map(|g| g * g * 3).sum()
    }

    fn extract(&self, image: &RgbImage) -> Result<FeatureVector> {
        let (w, h) = image.dims();
        if w == 0 || h == 0 {
            return Err(Error::InvalidParameter("empty image".into()));
        }
        // finest grid sums, then coarser grids by 2×2 pooling of cell sums
        let g0 = Self::GRIDS[0];
        let mut sums = vec![[0.0f64; 3]; g0 * g0];
        let mut counts = vec![0usize; g0 * g0];
        for y in 0..h {
            let cy = y * g0 / h;
            for x in 0..w {
                let cx = x * g0 / w;
                let i = cy * g0 + cx;
                let p = image.get(x, y);
                sums[i][0] += p[0];
                sums[i][1] += p[1];
                sums[i][2] += p[2];
                counts[i] += 1;
            }
        }
        let mut values = Vec::with_capacity(self.len());
        let mut level_sums = sums;
        let mut level_counts = counts;
        let mut g = g0;
        loop {
            for (s, &n) in level_sums.iter().zip(&level_counts) {
                let n = n.max(1) as f64;
                values.extend_from_slice(&[s[0] / n, s[1] / n, s[2] / n]);
            }
            if g == *Self::GRIDS.last().unwrap() {
                break;
            }
            let ng = g / 2;
            let mut ns = vec![[0.0; 3]; ng * ng];
            let mut nc = vec![0usize; ng * ng];
            for y in 0..g {
                for x in 0..g {
                    let j = (y / 2) * ng + x / 2;
                    let i = y * g + x;
                    for c in 0..3 {
                        ns[j][c] += level_sums[i][c];
                    }
                    nc[j] += level_counts[i];
                }
            }
            level_sums = ns;
            level_counts = nc;
            g = ng;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(FeatureVector {
            extractor: Self::NAME.to_string(),
            values,
        })
    }
}

/// Soft IoU loss `1 − Σ(Ŝ·S) / Σ(S + Ŝ − S·Ŝ)`; 1 when both are empty.
pub fn sil_loss(rendered: &GrayImage, target: &GrayImage) -> Result<f64> {
    rendered.ensure_same_dims(target)?;
    let mut inter = 0.0;
    let mut union = 0.0;
    for (&a, &b) in rendered.data().iter().zip(target.data()) {
        inter += a * b;
        union += a + b - a * b;
    }
    if union <= 0.0 {
        return Ok(1.0);
    }
    Ok((1.0 - inter / union).clamp(0.0, 1.0))
}

/// Edge-weighted mean distance `Σ D(x)·Ê(x) / Σ Ê(x)`, in pixels.
pub fn edge_loss(rendered_edges: &GrayImage, field: &DistanceField) -> Result<f64> {
    rendered_edges.ensure_same_dims(field.as_image())?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&e, &d) in rendered_edges.data().iter().zip(field.as_image().data()) {
        if e != 0.0 {
            num += d * e;
            den += e;
        }
    }
    if den <= 0.0 {
        return Err(Error::EmptyEdgeMap);
    }
    Ok(num / den)
}

/// Squared L2 distance between feature vectors from the same extractor.
pub fn app_loss(rendered: &FeatureVector, target: &FeatureVector) -> Result<f64> {
    if rendered.extractor != target.extractor || rendered.values.len() != target.values.len() {
        return Err(Error::ExtractorMismatch(
            format!("{}[{}]", rendered.extractor, rendered.values.len()),
            format!("{}[{}]", target.extractor, target.values.len()),
        ));
    }
    Ok(rendered
        .values
        .iter()
        .zip(&target.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

pub fn rot_loss(sil: f64, edge: f64, app: f64, w: &LossWeights) -> f64 {
    w.lambda_s * sil + w.lambda_e * edge + w.lambda_a * app
}

/// Per-component losses for one render.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub silhouette: f64,
    pub edge: f64,
    pub appearance: f64,
    pub total: f64,
}

/// Target channels for one instance, computed once and reused for every
/// evaluation.
#[derive(Clone)]
pub struct TargetViews {
    pub crop: RgbImage,
    pub mask: GrayImage,
    pub edges: GrayImage,
    pub distance: DistanceField,
    pub features: FeatureVector,
    extractor: Arc<dyn FeatureExtractor>,
}

impl std::fmt::Debug for TargetViews {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TargetViews")
            .field("size", &self.mask.dims())
            .field("extractor", &self.extractor.name())
            .finish()
    }
}

impl TargetViews {
    pub fn prepare(
        crop: RgbImage,
        mask: GrayImage,
        canny: &CannyParams,
        extractor: Arc<dyn FeatureExtractor>,
    ) -> Result<Self> {
        if crop.dims() != mask.dims() {
            let (a, b) = crop.dims();
            return Err(Error::DimensionMismatch(a, b, mask.width(), mask.height()));
        }
        let edges = canny_edges(&mask, canny);
        let distance = distance_transform(&edges);
        if distance.is_empty_source() {
            return Err(Error::EmptyMask);
        }
        let features = extractor.extract(&crop)?;
        Ok(Self {
            crop,
            mask,
            edges,
            distance,
            features,
            extractor,
        })
    }

    pub fn extractor(&self) -> &Arc<dyn FeatureExtractor> {
        &self.extractor
    }

    pub fn size(&self) -> usize {
        self.mask.width()
    }

    /// Evaluates all three terms against rendered channels.
    pub fn evaluate(
        &self,
        silhouette: &GrayImage,
        edge_map: &GrayImage,
        color: &RgbImage,
        weights: &LossWeights,
    ) -> Result<LossBreakdown> {
        let s = sil_loss(silhouette, &self.mask)?;
        let e = edge_loss(edge_map, &self.distance)?;
        let f = self.extractor.extract(color)?;
        let a = app_loss(&f, &self.features)?;
        Ok(LossBreakdown {
            silhouette: s,
            edge: e,
            appearance: a,
            total: rot_loss(s, e, a, weights),
        })
    }
}
