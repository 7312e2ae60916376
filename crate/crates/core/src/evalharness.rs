//! Camera sweep over a fixed elevation × distance grid and best-view
//! selection under a pluggable image metric (lower is more similar).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::image::RgbImage;
use crate::jsonfmt::to_stable_string;
use crate::losses::{app_loss, FeatureExtractor};
use crate::raster::{render_with, Camera, Framing, RenderOptions, DEFAULT_FOV_DEG, DEFAULT_IMAGE_SIZE};
use crate::scene::SceneLayout;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub elevation_start_deg: f64,
    pub elevation_stop_deg: f64,
    pub elevation_step_deg: f64,
    /// Distances are multiples of the scene radius (half the AABB diagonal).
    pub distance_min: f64,
    pub distance_max: f64,
    pub distance_count: usize,
    pub azimuth_deg: f64,
    pub fov_deg: f64,
    pub image_size: usize,
    pub background: [f64; 3],
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            elevation_start_deg: 90.0,
            elevation_stop_deg: 0.0,
            elevation_step_deg: 10.0,
            distance_min: 1.0,
            distance_max: 2.5,
            distance_count: 16,
            azimuth_deg: 0.0,
            fov_deg: DEFAULT_FOV_DEG,
            image_size: DEFAULT_IMAGE_SIZE,
            background: [1.0; 3],
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.elevation_step_deg > 0.0) {
            return Err(Error::InvalidParameter("elevation step must be positive".into()));
        }
        if self.distance_count == 0 || !(self.distance_min > 0.0) || self.distance_max < self.distance_min {
            return Err(Error::InvalidParameter(format!(
                "bad distance range [{}, {}] × {}",
                self.distance_min, self.distance_max, self.distance_count
            )));
        }
        if self.elevations().is_empty() {
            return Err(Error::InvalidParameter("elevation range is empty".into()));
        }
        Ok(())
    }

    /// From start toward stop (either direction), stop included when it lies
    /// on the step grid.
    pub fn elevations(&self) -> Vec<f64> {
        let (a, b, s) = (self.elevation_start_deg, self.elevation_stop_deg, self.elevation_step_deg);
        if !(s > 0.0) {
            return Vec::new();
        }
        let n = ((a - b).abs() / s + 1e-9).floor() as usize + 1;
        let dir = if b < a { -1.0 } else { 1.0 };
        (0..n).map(|k| a + dir * s * k as f64).collect()
    }

    pub fn distances(&self) -> Vec<f64> {
        let n = self.distance_count;
        if n == 1 {
            return vec![self.distance_min];
        }
        let last = (n - 1) as f64;
        (0..n)
            .map(|i| (self.distance_min * (last - i as f64) + self.distance_max * i as f64) / last)
            .collect()
    }

    pub fn view_count(&self) -> usize {
        self.elevations().len() * self.distances().len()
    }

    /// Elevation-major order.
    pub fn views(&self) -> Vec<ViewParams> {
        let ds = self.distances();
        self.elevations()
            .into_iter()
            .flat_map(|e| {
                ds.iter().map(move |&d| ViewParams {
                    elevation_deg: e,
                    distance_multiplier: d,
                    azimuth_deg: self.azimuth_deg,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewParams {
    pub elevation_deg: f64,
    pub distance_multiplier: f64,
    pub azimuth_deg: f64,
}

impl ViewParams {
    fn label(&self) -> String {
        format!("({}°, {:.2}×)", self.elevation_deg, self.distance_multiplier)
    }
}

#[derive(Debug, Clone)]
pub struct SweepView {
    pub params: ViewParams,
    pub image: RgbImage,
}

/// Renders the merged scene once per view, looking at the scene AABB center.
pub fn camera_sweep(scene: &SceneLayout, cfg: &SweepConfig, exec: Exec) -> Result<Vec<SweepView>> {
    cfg.validate()?;
    let mesh = scene.merged_mesh();
    if mesh.triangles().is_empty() {
        return Err(Error::EmptyScene);
    }
    let center = scene.aabb().center();
    let opts = RenderOptions {
        background: cfg.background,
        framing: Framing::Full,
        ..RenderOptions::default()
    };
    let params = cfg.views();
    exec.map(&params, |p| {
        let mut cam = Camera::new(p.azimuth_deg, p.elevation_deg, p.distance_multiplier)
            .with_image_size(cfg.image_size);
        cam.fov_deg = cfg.fov_deg;
        cam.look_at = Some(center);
        let out = render_with(&mesh, &cam, 0.0, &opts)?;
        Ok(SweepView {
            params: *p,
            image: out.color,
        })
    })
    .into_iter()
    .collect()
}

/// Image dissimilarity; lower means more similar.
pub trait ImageMetric: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, rendered: &RgbImage, reference: &RgbImage) -> Result<f64>;
}

/// Mean squared per-channel difference.
#[derive(Debug, Clone, Copy, Default)]
pub struct MseMetric;

impl ImageMetric for MseMetric {
    fn name(&self) -> &str {
        "mse"
    }

    fn score(&self, rendered: &RgbImage, reference: &RgbImage) -> Result<f64> {
        let ((w, h), (rw, rh)) = (rendered.dims(), reference.dims());
        if (w, h) != (rw, rh) {
            return Err(Error::DimensionMismatch(w, h, rw, rh));
        }
        let sum: f64 = rendered
            .data()
            .iter()
            .zip(reference.data())
            .map(|(a, b)| (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>())
            .sum();
        Ok(sum / (3 * w * h).max(1) as f64)
    }
}

/// Squared distance between appearance descriptors.
#[derive(Clone)]
pub struct FeatureDistanceMetric {
    extractor: Arc<dyn FeatureExtractor>,
    name: String,
}

impl FeatureDistanceMetric {
    pub fn new(extractor: Arc<dyn FeatureExtractor>) -> Self {
        let name = format!("feature:{}", extractor.name());
        Self { extractor, name }
    }
}

impl ImageMetric for FeatureDistanceMetric {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, rendered: &RgbImage, reference: &RgbImage) -> Result<f64> {
        app_loss(&self.extractor.extract(rendered)?, &self.extractor.extract(reference)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewScore {
    pub elevation_deg: f64,
    pub distance_multiplier: f64,
    pub metric: String,
    pub score: f64,
}

/// Scores every view; any failure or non-finite score aborts with the view
/// named.
pub fn score_views(
    views: &[SweepView],
    reference: &RgbImage,
    metric: &dyn ImageMetric,
    exec: Exec,
) -> Result<Vec<ViewScore>> {
    exec.map(views, |v| {
        let fail = |reason: String| Error::MetricFailure {
            metric: metric.name().to_string(),
            view: v.params.label(),
            reason,
        };
        let score = metric.score(&v.image, reference).map_err(|e| fail(e.to_string()))?;
        if !score.is_finite() {
            return Err(fail(format!("non-finite score {score}")));
        }
        Ok(ViewScore {
            elevation_deg: v.params.elevation_deg,
            distance_multiplier: v.params.distance_multiplier,
            metric: metric.name().to_string(),
            score,
        })
    })
    .into_iter()
    .collect()
}

/// Index of the minimum score; ties go to the lower elevation, then the
/// smaller distance.
pub fn select_best(scores: &[ViewScore]) -> Option<usize> {
    let key = |s: &ViewScore| (s.score, s.elevation_deg, s.distance_multiplier);
    (0..scores.len()).reduce(|best, i| {
        let (a, b) = (key(&scores[i]), key(&scores[best]));
        if a.partial_cmp(&b) == Some(std::cmp::Ordering::Less) {
            i
        } else {
            best
        }
    })
}

#[derive(Debug, Clone)]
pub struct BestView {
    pub index: usize,
    pub score: ViewScore,
    pub image: RgbImage,
    pub scores: Vec<ViewScore>,
}

pub fn best_view(
    views: &[SweepView],
    reference: &RgbImage,
    metric: &dyn ImageMetric,
    exec: Exec,
) -> Result<BestView> {
    if views.is_empty() {
        return Err(Error::InvalidParameter("no views to select from".into()));
    }
    let scores = score_views(views, reference, metric, exec)?;
    let index = select_best(&scores).expect("non-empty");
    Ok(BestView {
        index,
        score: scores[index].clone(),
        image: views[index].image.clone(),
        scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub metric: String,
    pub best: ViewScore,
    /// Elevation-major, same order as the sweep.
    pub views: Vec<ViewScore>,
}

impl SweepReport {
    pub fn new(cfg: &SweepConfig, best: &BestView) -> Self {
        Self {
            config: cfg.clone(),
            metric: best.score.metric.clone(),
            best: best.score.clone(),
            views: best.scores.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_stable_string(self)
    }
}

/// Grid of thumbnails: one row per elevation, one column per distance.
pub fn contact_sheet(views: &[SweepView], columns: usize, thumb: usize) -> RgbImage {
    let columns = columns.max(1);
    let rows = views.len().div_ceil(columns);
    let mut sheet = RgbImage::filled(columns * thumb, rows * thumb, [1.0; 3]);
    for (k, v) in views.iter().enumerate() {
        let small = ::image::imageops::thumbnail(&v.image.to_rgb8(), thumb as u32, thumb as u32);
        sheet.blit(&RgbImage::from_rgb8(&small), (k % columns) * thumb, (k / columns) * thumb);
    }
    sheet
}
