//! Translation and metric scale from a top-down view.
//!
//! One non-table instance is chosen as the scale anchor by its RMA score
//! (large pixel area, small aspect-ratio disagreement with its size prior).
//! The anchor fixes a global meters-per-pixel factor, which converts every
//! box into a tabletop-frame position and footprint. Heights come from the
//! priors, and the stacking graph resolves z bottom-up from the table.
//!
//! Image to tabletop mapping: image +u (right) is world −x, image +v (down,
//! toward the viewer) is world +y, origin at the table box center.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::footprint_dims;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopViewBox {
    pub id: String,
    pub x_min: f64,
    pub y_min: f64,
    pub w_img: f64,
    pub h_img: f64,
    pub image_width: u32,
    pub image_height: u32,
}

impl TopViewBox {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.x_min, self.y_min, self.w_img, self.h_img];
        if !vals.iter().all(|v| v.is_finite()) || self.w_img <= 0.0 || self.h_img <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "box '{}' must have positive finite size",
                self.id
            )));
        }
        // half a pixel of slack for detector rounding
        let (iw, ih) = (self.image_width as f64, self.image_height as f64);
        if self.x_min < -0.5
            || self.y_min < -0.5
            || self.x_min + self.w_img > iw + 0.5
            || self.y_min + self.h_img > ih + 0.5
        {
            return Err(Error::InvalidParameter(format!(
                "box '{}' exceeds the {}x{} image",
                self.id, self.image_width, self.image_height
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.w_img * self.h_img
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x_min + 0.5 * self.w_img, self.y_min + 0.5 * self.h_img)
    }
}

/// Physical size in meters: `width` along canonical x, `depth` along y,
/// `height` along z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizePrior {
    pub id: String,
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<String>,
}

impl SizePrior {
    pub fn new(id: impl Into<String>, width: f64, depth: f64, height: f64) -> Result<Self> {
        let p = Self {
            id: id.into(),
            width,
            depth,
            height,
            confidence: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.width, self.depth, self.height]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
        {
            return Err(Error::InvalidParameter(format!(
                "size prior '{}' must be positive",
                self.id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmaScore {
    pub id: String,
    pub area_px: f64,
    pub epsilon_ratio: f64,
    pub score: f64,
    pub tau: f64,
}

/// `|log r_phys − log r_img|` with both ratios taken as width over depth
/// (image: box width over box height).
pub fn ratio_error(size: &SizePrior, yaw_deg: f64, b: &TopViewBox) -> f64 {
    let (w, d) = footprint_dims(size.width, size.depth, yaw_deg);
    ((w / d).ln() - (b.w_img / b.h_img).ln()).abs()
}

pub fn rma_score(area_px: f64, epsilon: f64, tau: f64) -> f64 {
    let q = epsilon / tau;
    area_px / (1.0 + q * q)
}

#[derive(Debug, Clone, Copy)]
pub struct AnchorCandidate<'a> {
    pub bbox: &'a TopViewBox,
    pub prior: &'a SizePrior,
    pub yaw_deg: f64,
    pub is_table: bool,
}

impl AnchorCandidate<'_> {
    pub fn score(&self, tau: f64) -> RmaScore {
        let eps = ratio_error(self.prior, self.yaw_deg, self.bbox);
        RmaScore {
            id: self.bbox.id.clone(),
            area_px: self.bbox.area(),
            epsilon_ratio: eps,
            score: rma_score(self.bbox.area(), eps, tau),
            tau,
        }
    }
}

/// Highest score among non-table candidates; ties go to the larger area,
/// then the lexicographically smaller id.
pub fn select_anchor(candidates: &[AnchorCandidate<'_>], tau: f64) -> Result<RmaScore> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau {tau} must be positive")));
    }
    candidates
        .iter()
        .filter(|c| !c.is_table)
        .map(|c| c.score(tau))
        .min_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(b.area_px.total_cmp(&a.area_px))
                .then_with(|| a.id.cmp(&b.id))
        })
        .ok_or(Error::NoAnchorCandidate)
}

/// Meters per pixel: mean of the anchor's two per-axis ratios.
pub fn solve_alpha(anchor_box: &TopViewBox, anchor_size: &SizePrior, anchor_yaw_deg: f64) -> f64 {
    let (w, d) = footprint_dims(anchor_size.width, anchor_size.depth, anchor_yaw_deg);
    0.5 * (w / anchor_box.w_img + d / anchor_box.h_img)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsaConfig {
    pub tau: f64,
    /// Footprint scale factor beyond which a prior is considered wrong.
    pub rescale_threshold: f64,
    /// Below this `|cos 2θ|` the footprint unfit is ill-conditioned and the
    /// prior aspect is used instead.
    pub min_unfit_determinant: f64,
}

impl Default for TsaConfig {
    fn default() -> Self {
        Self {
            tau: 0.25,
            rescale_threshold: 1.5,
            min_unfit_determinant: 0.2,
        }
    }
}

/// Object-frame footprint `(w, d)` whose yawed AABB is `(fw, fd)`.
///
/// Solves `[|c| |s|; |s| |c|]·(w, d) = (fw, fd)`. Returns `None` when the
/// system is ill-conditioned or the solution is not positive.
pub fn unfit_footprint(fw: f64, fd: f64, yaw_deg: f64, min_det: f64) -> Option<(f64, f64)> {
    let (s, c) = yaw_deg.to_radians().sin_cos();
    let (a, b) = (c.abs(), s.abs());
    let det = a * a - b * b;
    if det.abs() < min_det {
        return None;
    }
    let w = (a * fw - b * fd) / det;
    let d = (a * fd - b * fw) / det;
    (w > 0.0 && d > 0.0).then_some((w, d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub id: String,
    pub yaw_deg: f64,
    /// Meters, tabletop frame; the position of the model's bottom center.
    pub translation: Vector3<f64>,
    /// Meters: object-frame width, depth, height.
    pub scale: Vector3<f64>,
    /// Box footprint over prior footprint (geometric mean of the two axes).
    pub footprint_factor: f64,
    pub rescaled: bool,
    /// The yaw unfit was ill-conditioned and the prior aspect was used.
    pub aspect_fallback: bool,
}

/// Horizontal placement and scale from boxes. `z` is left at 0.
pub fn place_and_scale(
    bbox: &TopViewBox,
    prior: &SizePrior,
    yaw_deg: f64,
    alpha: f64,
    table_box: &TopViewBox,
    cfg: &TsaConfig,
) -> Placement {
    let (cu, cv) = bbox.center();
    let (tu, tv) = table_box.center();
    let x = -(cu - tu) * alpha;
    let y = (cv - tv) * alpha;
    let (fw, fd) = (bbox.w_img * alpha, bbox.h_img * alpha);
    let (w, d, fallback) = match unfit_footprint(fw, fd, yaw_deg, cfg.min_unfit_determinant) {
        Some((w, d)) => (w, d, false),
        None => {
            // keep the prior aspect and match the box in the mean
            let (pw, pd) = footprint_dims(prior.width, prior.depth, yaw_deg);
            let k = 0.5 * (fw / pw + fd / pd);
            (prior.width * k, prior.depth * k, true)
        }
    };
    let factor = ((w * d) / (prior.width * prior.depth)).sqrt();
    let rescaled = factor > cfg.rescale_threshold || factor < 1.0 / cfg.rescale_threshold;
    let height = if rescaled {
        prior.height * factor
    } else {
        prior.height
    };
    Placement {
        id: bbox.id.clone(),
        yaw_deg,
        translation: Vector3::new(x, y, 0.0),
        scale: Vector3::new(w, d, height),
        footprint_factor: factor,
        rescaled,
        aspect_fallback: fallback,
    }
}

/// "Rests on" relation: `above → below` edges. Instances without an entry
/// rest on the table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StackingGraph {
    pub edges: Vec<(String, String)>,
}

impl StackingGraph {
    pub fn new(edges: Vec<(String, String)>) -> Self {
        Self { edges }
    }

    pub fn supports_of(&self, id: &str) -> Vec<&str> {
        self.edges
            .iter()
            .filter(|(a, _)| a == id)
            .map(|(_, b)| b.as_str())
            .collect()
    }

    /// Checks ids against `known` and returns a bottom-up order of `known`.
    /// Edges onto the table id are allowed and redundant.
    pub fn topological_order(&self, known: &[String], table_id: &str) -> Result<Vec<String>> {
        let ids: BTreeSet<&str> = known.iter().map(String::as_str).collect();
        let mut below: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (a, b) in &self.edges {
            for id in [a, b] {
                if !ids.contains(id.as_str()) {
                    return Err(Error::UnknownInstance(id.clone()));
                }
            }
            if a == table_id {
                return Err(Error::InvalidParameter(format!(
                    "table '{table_id}' cannot rest on '{b}'"
                )));
            }
            if a == b {
                return Err(Error::StackingCycle(vec![a.clone(), b.clone()]));
            }
            below.entry(a.as_str()).or_default().push(b.as_str());
        }
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut mark: BTreeMap<&str, Mark> = ids.iter().map(|&i| (i, Mark::New)).collect();
        let mut order = Vec::with_capacity(ids.len());
        let mut path: Vec<&str> = Vec::new();

        fn visit<'a>(
            id: &'a str,
            below: &BTreeMap<&'a str, Vec<&'a str>>,
            mark: &mut BTreeMap<&'a str, Mark>,
            path: &mut Vec<&'a str>,
            order: &mut Vec<String>,
        ) -> Result<()> {
            match mark[id] {
                Mark::Done => return Ok(()),
                Mark::Active => {
                    let start = path.iter().position(|&p| p == id).unwrap_or(0);
                    let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(id.to_string());
                    return Err(Error::StackingCycle(cycle));
                }
                Mark::New => {}
            }
            mark.insert(id, Mark::Active);
            path.push(id);
            for &b in below.get(id).map(Vec::as_slice).unwrap_or(&[]) {
                visit(b, below, mark, path, order)?;
            }
            path.pop();
            mark.insert(id, Mark::Done);
            order.push(id.to_string());
            Ok(())
        }

        // table first, then the rest in id order
        visit(table_id, &below, &mut mark, &mut path, &mut order)?;
        for &id in &ids {
            visit(id, &below, &mut mark, &mut path, &mut order)?;
        }
        Ok(order)
    }
}

/// Per-instance z so each bottom rests on the top of its highest support
/// (the table top for unsupported instances). Heights are world AABB
/// heights; the table's own z is 0.
pub fn stack_heights(
    graph: &StackingGraph,
    heights: &BTreeMap<String, f64>,
    table_id: &str,
) -> Result<BTreeMap<String, f64>> {
    if !heights.contains_key(table_id) {
        return Err(Error::MissingTable);
    }
    let known: Vec<String> = heights.keys().cloned().collect();
    let order = graph.topological_order(&known, table_id)?;
    let mut z: BTreeMap<String, f64> = BTreeMap::new();
    for id in order {
        let zi = if id == table_id {
            0.0
        } else {
            let supports = graph.supports_of(&id);
            let tops = supports
                .iter()
                .map(|s| z[*s] + heights[*s])
                .fold(f64::NEG_INFINITY, f64::max);
            if supports.is_empty() {
                heights[table_id]
            } else {
                tops
            }
        };
        z.insert(id, zi);
    }
    Ok(z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsaInput {
    pub table_id: String,
    pub boxes: Vec<TopViewBox>,
    pub priors: Vec<SizePrior>,
    /// Yaw per instance in degrees; the table defaults to 0.
    pub yaws: BTreeMap<String, f64>,
    #[serde(default)]
    pub stacking: StackingGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsaResult {
    pub anchor: RmaScore,
    pub alpha: f64,
    pub scores: Vec<RmaScore>,
    /// In box order.
    pub placements: Vec<Placement>,
    pub warnings: Vec<String>,
}

impl TsaResult {
    pub fn placement(&self, id: &str) -> Option<&Placement> {
        self.placements.iter().find(|p| p.id == id)
    }

    /// Report with translations and scales in centimeters.
    pub fn to_report_json(&self) -> Result<String> {
        let cm = |v: &Vector3<f64>| [v.x * 100.0, v.y * 100.0, v.z * 100.0];
        let instances: BTreeMap<&str, serde_json::Value> = self
            .placements
            .iter()
            .map(|p| {
                (
                    p.id.as_str(),
                    serde_json::json!({
                        "yaw_deg": p.yaw_deg,
                        "translation_cm": cm(&p.translation),
                        "scale_cm": cm(&p.scale),
                        "rescaled": p.rescaled,
                        "aspect_fallback": p.aspect_fallback,
                    }),
                )
            })
            .collect();
        crate::jsonfmt::to_stable_string(&serde_json::json!({
            "anchor": self.anchor,
            "alpha_m_per_px": self.alpha,
            "scores": self.scores,
            "instances": instances,
            "warnings": self.warnings,
        }))
    }
}

/// Anchor, scale factor, horizontal placement and stacking for a scene.
pub fn run_tsa(input: &TsaInput, cfg: &TsaConfig) -> Result<TsaResult> {
    let mut boxes: BTreeMap<&str, &TopViewBox> = BTreeMap::new();
    for b in &input.boxes {
        b.validate()?;
        if boxes.insert(b.id.as_str(), b).is_some() {
            return Err(Error::DuplicateInstance(b.id.clone()));
        }
    }
    let mut priors: BTreeMap<&str, &SizePrior> = BTreeMap::new();
    for p in &input.priors {
        p.validate()?;
        if !boxes.contains_key(p.id.as_str()) {
            return Err(Error::UnknownInstance(p.id.clone()));
        }
        if priors.insert(p.id.as_str(), p).is_some() {
            return Err(Error::DuplicateInstance(p.id.clone()));
        }
    }
    for id in boxes.keys() {
        if !priors.contains_key(id) {
            return Err(Error::IdMismatch(format!("no size prior for '{id}'")));
        }
    }
    for id in input.yaws.keys() {
        if !boxes.contains_key(id.as_str()) {
            return Err(Error::UnknownInstance(id.clone()));
        }
    }
    let table_box = *boxes.get(input.table_id.as_str()).ok_or(Error::MissingTable)?;
    let yaw = |id: &str| -> Result<f64> {
        match input.yaws.get(id) {
            Some(&y) => Ok(y),
            None if id == input.table_id => Ok(0.0),
            None => Err(Error::IdMismatch(format!("no yaw for '{id}'"))),
        }
    };

    let mut candidates = Vec::with_capacity(input.boxes.len());
    for b in &input.boxes {
        candidates.push(AnchorCandidate {
            bbox: b,
            prior: priors[b.id.as_str()],
            yaw_deg: yaw(&b.id)?,
            is_table: b.id == input.table_id,
        });
    }
    let anchor = select_anchor(&candidates, cfg.tau)?;
    let scores: Vec<RmaScore> = candidates
        .iter()
        .filter(|c| !c.is_table)
        .map(|c| c.score(cfg.tau))
        .collect();
    let anchor_id = anchor.id.as_str();
    let alpha = solve_alpha(boxes[anchor_id], priors[anchor_id], yaw(anchor_id)?);

    let mut warnings = Vec::new();
    let mut placements = Vec::with_capacity(input.boxes.len());
    for c in &candidates {
        let p = place_and_scale(c.bbox, c.prior, c.yaw_deg, alpha, table_box, cfg);
        if p.rescaled && !c.is_table {
            warnings.push(format!(
                "'{}' prior footprint off by factor {:.3}; rescaled to its box",
                p.id, p.footprint_factor
            ));
        }
        if p.aspect_fallback {
            warnings.push(format!(
                "'{}' footprint unfit ill-conditioned at yaw {:.2}; kept prior aspect",
                p.id, p.yaw_deg
            ));
        }
        placements.push(p);
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let heights: BTreeMap<String, f64> =
        placements.iter().map(|p| (p.id.clone(), p.scale.z)).collect();
    let z = stack_heights(&input.stacking, &heights, &input.table_id)?;
    for p in &mut placements {
        p.translation.z = z[&p.id];
        if p.id == input.table_id {
            // the table defines the origin
            p.translation.x = 0.0;
            p.translation.y = 0.0;
        }
    }
    Ok(TsaResult {
        anchor,
        alpha,
        scores,
        placements,
        warnings,
    })
}
