//! Yaw recovery by render-and-compare: an exhaustive coarse grid followed by
//! Adam refinement of the best candidates.
//!
//! Gradients are central finite differences of the full loss. Every probe is
//! a real evaluation, so the lowest probe seen is tracked and returned; the
//! refined loss can never exceed the candidate's starting loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{normalize_yaw, TriangleMesh};
use crate::image::{GrayImage, RgbImage};
use crate::losses::{LossBreakdown, LossWeights, TargetViews};
use crate::raster::{render_with, Camera, Framing, RenderOptions, RenderOutputs, DEFAULT_SOFTNESS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DroConfig {
    pub grid_step_deg: f64,
    pub candidate_count: usize,
    pub refine_steps: usize,
    /// Adam step size, in radians.
    pub learning_rate: f64,
    pub fd_step_deg: f64,
    /// Also refine camera azimuth and elevation.
    pub refine_camera: bool,
    pub weights: LossWeights,
    pub softness: f64,
}

impl Default for DroConfig {
    fn default() -> Self {
        Self {
            grid_step_deg: 5.0,
            candidate_count: 8,
            refine_steps: 140,
            learning_rate: 0.03,
            fd_step_deg: 0.5,
            refine_camera: false,
            weights: LossWeights::default(),
            softness: DEFAULT_SOFTNESS,
        }
    }
}

impl DroConfig {
    pub fn grid_len(&self) -> usize {
        (360.0 / self.grid_step_deg).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let n = 360.0 / self.grid_step_deg;
        if !(self.grid_step_deg > 0.0) || (n - n.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "grid step {} must divide 360",
                self.grid_step_deg
            )));
        }
        if self.candidate_count == 0 {
            return Err(Error::InvalidParameter("candidate count must be ≥ 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(self.fd_step_deg > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "finite-difference step {} must be positive",
                self.fd_step_deg
            )));
        }
        if !(self.softness > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "softness {} must be positive",
                self.softness
            )));
        }
        self.weights.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub yaw_deg: f64,
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseResult {
    /// Number of loss evaluations performed.
    pub evaluations: usize,
    /// Ascending by total loss.
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTrace {
    pub initial_yaw_deg: f64,
    pub initial_loss: f64,
    pub final_yaw_deg: f64,
    pub final_loss: f64,
    /// Parameter yaw (unwrapped) after each completed step.
    pub yaw_trace: Vec<f64>,
    /// Lower of the two probe losses at each step.
    pub loss_trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopped_early: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraAngles {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationResult {
    /// In `[0, 360)`.
    pub yaw_deg: f64,
    pub loss: LossBreakdown,
    pub candidates: Vec<CandidateTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraAngles>,
    pub evaluations: usize,
}

/// Loss as a function of (yaw, azimuth, elevation) for one instance.
struct Objective<'a> {
    mesh: &'a TriangleMesh,
    target: &'a TargetViews,
    camera: Camera,
    opts: RenderOptions,
    weights: LossWeights,
}

impl<'a> Objective<'a> {
    fn new(
        mesh: &'a TriangleMesh,
        target: &'a TargetViews,
        camera: &Camera,
        cfg: &DroConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let camera = camera.with_image_size(target.size());
        camera.validate()?;
        Ok(Self {
            mesh,
            target,
            camera,
            opts: RenderOptions {
                softness: cfg.softness,
                background: [0.0; 3],
                framing: Framing::TightSquare,
            },
            weights: cfg.weights,
        })
    }

    fn render(&self, yaw_deg: f64, angles: Option<CameraAngles>) -> Result<RenderOutputs> {
        let mut cam = self.camera;
        if let Some(a) = angles {
            cam.azimuth_deg = a.azimuth_deg;
            cam.elevation_deg = a.elevation_deg;
        }
        render_with(self.mesh, &cam, yaw_deg, &self.opts)
    }

    fn eval(&self, yaw_deg: f64, angles: Option<CameraAngles>) -> Result<LossBreakdown> {
        let r = self.render(yaw_deg, angles)?;
        self.target
            .evaluate(&r.silhouette, &r.edge_map, &r.color, &self.weights)
    }
}

/// Evaluates the loss at every grid angle and keeps the best
/// `candidate_count`.
pub fn coarse_search(
    mesh: &TriangleMesh,
    target: &TargetViews,
    camera: &Camera,
    cfg: &DroConfig,
) -> Result<CoarseResult> {
    let obj = Objective::new(mesh, target, camera, cfg)?;
    coarse_with(&obj, cfg)
}

fn coarse_with(obj: &Objective<'_>, cfg: &DroConfig) -> Result<CoarseResult> {
    let n = cfg.grid_len();
    let mut all = Vec::with_capacity(n);
    for k in 0..n {
        let yaw = k as f64 * cfg.grid_step_deg;
        all.push(Candidate {
            yaw_deg: yaw,
            loss: obj.eval(yaw, None)?,
        });
    }
    // stable sort: equal losses keep grid order
    all.sort_by(|a, b| a.loss.total.total_cmp(&b.loss.total));
    all.truncate(cfg.candidate_count);
    Ok(CoarseResult {
        evaluations: n,
        candidates: all,
    })
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= lr * mh / (vh.sqrt() + Self::EPS);
        }
    }
}

struct Refined {
    yaw_deg: f64,
    loss: LossBreakdown,
    camera: Option<CameraAngles>,
    trace: CandidateTrace,
    evaluations: usize,
}

/// Adam refinement from one coarse candidate.
pub fn refine(
    mesh: &TriangleMesh,
    target: &TargetViews,
    camera: &Camera,
    candidate: &Candidate,
    cfg: &DroConfig,
) -> Result<RotationResult> {
    let obj = Objective::new(mesh, target, camera, cfg)?;
    let r = refine_with(&obj, candidate, cfg);
    Ok(RotationResult {
        yaw_deg: normalize_yaw(r.yaw_deg),
        loss: r.loss,
        candidates: vec![r.trace],
        camera: r.camera,
        evaluations: r.evaluations,
    })
}

fn refine_with(obj: &Objective<'_>, cand: &Candidate, cfg: &DroConfig) -> Refined {
    let dim = if cfg.refine_camera { 3 } else { 1 };
    // params in radians: yaw, then azimuth and elevation
    let mut params = vec![cand.yaw_deg.to_radians()];
    if cfg.refine_camera {
        params.push(obj.camera.azimuth_deg.to_radians());
        params.push(obj.camera.elevation_deg.to_radians());
    }
    let unpack = |p: &[f64]| -> (f64, Option<CameraAngles>) {
        let angles = (p.len() == 3).then(|| CameraAngles {
            azimuth_deg: p[1].to_degrees(),
            elevation_deg: p[2].to_degrees().clamp(0.0, 90.0),
        });
        (p[0].to_degrees(), angles)
    };
    let (_, cam0) = unpack(&params);
    let mut best = (cand.yaw_deg, cam0, cand.loss);
    let h = cfg.fd_step_deg.to_radians();
    let mut adam = Adam::new(dim);
    let mut evaluations = 0;
    let mut yaw_trace = Vec::with_capacity(cfg.refine_steps);
    let mut loss_trace = Vec::with_capacity(cfg.refine_steps);
    let mut stopped_early = None;

    'steps: for _ in 0..cfg.refine_steps {
        let mut grad = vec![0.0; dim];
        let mut step_min = f64::INFINITY;
        for i in 0..dim {
            let mut probe = |delta: f64| -> Result<f64> {
                let mut p = params.clone();
                p[i] += delta;
                let (yaw, angles) = unpack(&p);
                evaluations += 1;
                let l = obj.eval(yaw, angles)?;
                if !l.total.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "non-finite loss at yaw {yaw}"
                    )));
                }
                if l.total < best.2.total {
                    best = (yaw, angles, l);
                }
                step_min = step_min.min(l.total);
                Ok(l.total)
            };
            let lp = probe(h);
            let lm = lp.and_then(|lp| probe(-h).map(|lm| (lp, lm)));
            match lm {
                Ok((lp, lm)) => grad[i] = (lp - lm) / (2.0 * h),
                Err(e) => {
                    stopped_early = Some(e.to_string());
                    break 'steps;
                }
            }
        }
        adam.step(&mut params, &grad, cfg.learning_rate);
        yaw_trace.push(params[0].to_degrees());
        loss_trace.push(step_min);
    }

    let (yaw, camera, loss) = best;
    Refined {
        yaw_deg: yaw,
        loss,
        camera,
        trace: CandidateTrace {
            initial_yaw_deg: cand.yaw_deg,
            initial_loss: cand.loss.total,
            final_yaw_deg: normalize_yaw(yaw),
            final_loss: loss.total,
            yaw_trace,
            loss_trace,
            stopped_early,
        },
        evaluations,
    }
}

/// Coarse search, refinement of every candidate, global minimum.
pub fn estimate_rotation(
    mesh: &TriangleMesh,
    target: &TargetViews,
    camera: &Camera,
    cfg: &DroConfig,
) -> Result<RotationResult> {
    let obj = Objective::new(mesh, target, camera, cfg)?;
    let coarse = coarse_with(&obj, cfg)?;
    let mut evaluations = coarse.evaluations;
    let mut traces = Vec::with_capacity(coarse.candidates.len());
    let mut best: Option<Refined> = None;
    for cand in &coarse.candidates {
        let r = refine_with(&obj, cand, cfg);
        evaluations += r.evaluations;
        traces.push(r.trace.clone());
        // strict comparison keeps the earlier (better-ranked) candidate on ties
        if best.as_ref().is_none_or(|b| r.loss.total < b.loss.total) {
            best = Some(r);
        }
    }
    let best = best.ok_or_else(|| {
        Error::AllCandidatesFailed(vec!["coarse search produced no candidates".into()])
    })?;
    Ok(RotationResult {
        yaw_deg: normalize_yaw(best.yaw_deg),
        loss: best.loss,
        candidates: traces,
        camera: best.camera,
        evaluations,
    })
}

/// One instance's inputs to [`estimate_batch`].
#[derive(Clone, Copy)]
pub struct DroJob<'a> {
    pub mesh: &'a TriangleMesh,
    pub target: &'a TargetViews,
    pub camera: Camera,
}

/// Independent per-instance estimation; output order matches input order.
pub fn estimate_batch(
    jobs: &[DroJob<'_>],
    cfg: &DroConfig,
    exec: Exec,
) -> Vec<Result<RotationResult>> {
    exec.map(jobs, |j| estimate_rotation(j.mesh, j.target, &j.camera, cfg))
}

/// Side-by-side comparison: target on top, render at `yaw_deg` below, with
/// silhouette, edge and color columns.
pub fn debug_triptych(
    mesh: &TriangleMesh,
    target: &TargetViews,
    camera: &Camera,
    yaw_deg: f64,
    cfg: &DroConfig,
) -> Result<RgbImage> {
    let obj = Objective::new(mesh, target, camera, cfg)?;
    let r = obj.render(yaw_deg, None)?;
    let n = target.size();
    let norm = |g: &GrayImage| {
        let m = g.max().max(1e-12);
        RgbImage::from_gray(&g.map(|v| v / m))
    };
    let mut sheet = RgbImage::new(3 * n, 2 * n);
    let rows = [
        [norm(&target.mask), norm(&target.edges), target.crop.clone()],
        [norm(&r.silhouette), norm(&r.edge_map), r.color],
    ];
    for (j, row) in rows.iter().enumerate() {
        for (i, img) in row.iter().enumerate() {
            sheet.blit(img, i * n, j * n);
        }
    }
    Ok(sheet)
}

/// Builds a target from a self-render, for synthetic validation.
pub fn self_render_target(
    mesh: &TriangleMesh,
    camera: &Camera,
    yaw_deg: f64,
    softness: f64,
    extractor: std::sync::Arc<dyn crate::losses::FeatureExtractor>,
) -> Result<TargetViews> {
    let r = render_with(
        mesh,
        camera,
        yaw_deg,
        &RenderOptions {
            softness,
            background: [0.0; 3],
            framing: Framing::TightSquare,
        },
    )?;
    let mask = r.coverage_mask();
    TargetViews::prepare(
        r.color,
        mask,
        &crate::imageproc::CannyParams::default(),
        extractor,
    )
}
