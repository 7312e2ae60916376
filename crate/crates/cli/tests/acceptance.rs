//! Acceptance suite. Prints one PASS/FAIL line per criterion with the
//! measured values and pinned tolerances, then exits nonzero if any failed.
//!
//! Run alone with `cargo test -p tablescene-cli --test acceptance`.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tablescene::dro::{coarse_search, estimate_rotation, self_render_target, DroConfig};
use tablescene::evalharness::{
    best_view, camera_sweep, score_views, ImageMetric, MseMetric, SweepConfig,
};
use tablescene::geometry::{footprint_dims, CanonicalModel, RigidScaleTransform, TriangleMesh};
use tablescene::image::{GrayImage, RgbImage};
use tablescene::imageproc::{distance_transform, squared_edt};
use tablescene::losses::{
    app_loss, edge_loss, rot_loss, sil_loss, FeatureVector, LossWeights, PatchMeanExtractor,
};
use tablescene::raster::Camera;
use tablescene::scene::{
    assemble, collision_metrics, detect_collisions, reference_detect_collisions, CollidingPair,
    CollisionReport, ModelSpec, Pose, SceneLayout,
};
use tablescene::tsa::{
    rma_score, run_tsa, select_anchor, AnchorCandidate, SizePrior, StackingGraph, TopViewBox,
    TsaConfig, TsaInput,
};
use tablescene::Exec;
use tablescene_cli::demo::{ground_truth_scene, write_demo_bundle};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t0 = Instant::now();
    let mut o = f();
    let dt = t0.elapsed();
    o.detail = format!("{}; {:.1}s (limit {}s)", o.detail, dt.as_secs_f64(), limit.as_secs());
    o.pass &= dt <= limit;
    o
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// 1. Loss identities, exact to 1e-12.
fn loss_identities() -> Outcome {
    const TOL: f64 = 1e-12;
    // two equal masks overlapping by half their area: IoU 1/3
    let a = GrayImage::from_fn(8, 4, |x, _| if x < 4 { 1.0 } else { 0.0 });
    let b = GrayImage::from_fn(8, 4, |x, _| if (2..6).contains(&x) { 1.0 } else { 0.0 });
    let sil = sil_loss(&a, &b).unwrap();

    // target edge in column 0; rendered edges at distances 3 and 4
    let target = GrayImage::from_fn(8, 1, |x, _| if x == 0 { 1.0 } else { 0.0 });
    let field = distance_transform(&target);
    let rendered = GrayImage::from_fn(8, 1, |x, _| if x == 3 || x == 4 { 1.0 } else { 0.0 });
    let edge = edge_loss(&rendered, &field).unwrap();

    let fv = |v: Vec<f64>| FeatureVector {
        extractor: "basis".into(),
        values: v,
    };
    let app = app_loss(&fv(vec![1.0, 0.0, 0.0]), &fv(vec![0.0, 1.0, 0.0])).unwrap();

    let w = LossWeights::new(0.5, 0.5, 2.0).unwrap();
    let total = rot_loss(1.0, 1.0, 1.0, &w);

    let ok = close(sil, 2.0 / 3.0, TOL) && close(edge, 3.5, TOL) && close(app, 2.0, TOL) && close(total, 3.0, TOL);
    outcome(
        ok,
        format!("sil {sil} (2/3), edge {edge} (3.5), app {app} (2.0), total {total} (3.0), tol {TOL:e}"),
    )
}

/// Two-color L-shaped block: no rotational symmetry in shape or color.
fn l_block() -> TriangleMesh {
    let a = TriangleMesh::cuboid(Point3::new(-0.3, -0.1, 0.0), Point3::new(0.3, 0.1, 0.15))
        .with_uniform_color([0.8, 0.2, 0.2]);
    let b = TriangleMesh::cuboid(Point3::new(0.1, 0.1, 0.0), Point3::new(0.3, 0.35, 0.3))
        .with_uniform_color([0.2, 0.3, 0.9]);
    TriangleMesh::merge(&[&a, &b])
}

fn yaw_error(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

// 2. Rotation recovery on self-rendered targets.
fn dro_recovery() -> Outcome {
    const N: usize = 50;
    const WITHIN: f64 = 3.0;
    let mesh = l_block();
    let cfg = DroConfig::default();
    let camera = Camera::default();
    let extractor = Arc::new(PatchMeanExtractor);
    let mut rng = ChaCha8Rng::seed_from_u64(0x05ee_dd70);
    let (mut within, mut within_step, mut monotone, mut coarse_ok) = (0, 0, 0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..N {
        let yaw: f64 = rng.gen_range(0.0..360.0);
        let target = self_render_target(&mesh, &camera, yaw, cfg.softness, extractor.clone()).unwrap();
        let coarse = coarse_search(&mesh, &target, &camera, &cfg).unwrap();
        coarse_ok += usize::from(coarse.evaluations == 72 && coarse.candidates.len() == 8);
        let r = estimate_rotation(&mesh, &target, &camera, &cfg).unwrap();
        let err = yaw_error(r.yaw_deg, yaw);
        worst = worst.max(err);
        within += usize::from(err <= WITHIN);
        within_step += usize::from(err <= cfg.grid_step_deg);
        monotone += usize::from(r.candidates.iter().all(|c| c.final_loss <= c.initial_loss));
    }
    let frac = within as f64 / N as f64;
    let ok = frac >= 0.9 && within_step == N && monotone == N && coarse_ok == N;
    outcome(
        ok,
        format!(
            "{within}/{N} within {WITHIN}° (need ≥90%), {within_step}/{N} within one grid step, worst {worst:.3}°, \
             refined ≤ initial on {monotone}/{N}, coarse 72 evals / 8 candidates on {coarse_ok}/{N}"
        ),
    )
}

fn brute_force_edt(sites: &[bool], w: usize, h: usize) -> Vec<f64> {
    let pts: Vec<(i64, i64)> = (0..w * h).filter(|&i| sites[i]).map(|i| ((i % w) as i64, (i / w) as i64)).collect();
    (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            pts.iter()
                .map(|&(px, py)| ((px - x).pow(2) + (py - y).pow(2)) as f64)
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

// 3. Distance transform against brute force, plus 1-Lipschitz.
fn distance_transform_exact() -> Outcome {
    const N: usize = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(0xd157);
    let (mut exact, mut lipschitz) = (0, 0);
    for k in 0..25 {
        let density = [0.001, 0.01, 0.05, 0.2, 0.5][k % 5];
        let mut sites: Vec<bool> = (0..N * N).map(|_| rng.gen_bool(density)).collect();
        sites[rng.gen_range(0..N * N)] = true;
        let fast = squared_edt(&sites, N, N);
        exact += usize::from(fast == brute_force_edt(&sites, N, N));
        let img = GrayImage::from_vec(N, N, sites.iter().map(|&s| f64::from(u8::from(s))).collect()).unwrap();
        let d = distance_transform(&img);
        let mut lip = true;
        for y in 0..N {
            for x in 0..N {
                for (dx, dy) in [(1usize, 0usize), (0, 1), (1, 1)] {
                    if x + dx < N && y + dy < N {
                        let step = ((dx * dx + dy * dy) as f64).sqrt();
                        lip &= (d.get(x, y) - d.get(x + dx, y + dy)).abs() <= step + 1e-12;
                    }
                }
                if x >= 1 && y + 1 < N {
                    lip &= (d.get(x, y) - d.get(x - 1, y + 1)).abs() <= 2f64.sqrt() + 1e-12;
                }
            }
        }
        lipschitz += usize::from(lip);
    }
    outcome(exact == 25 && lipschitz == 25, format!("exact on {exact}/25, 1-Lipschitz on {lipschitz}/25"))
}

fn bx(id: &str, x: f64, y: f64, w: f64, h: f64) -> TopViewBox {
    TopViewBox {
        id: id.into(),
        x_min: x,
        y_min: y,
        w_img: w,
        h_img: h,
        image_width: 4096,
        image_height: 4096,
    }
}

// 4. Reliability-weighted anchor score and selection.
fn anchor_selection() -> Outcome {
    let tau = 0.25;
    let spot = [
        (rma_score(1000.0, 0.0, tau), 1000.0),
        (rma_score(1000.0, tau, tau), 500.0),
        (rma_score(4000.0, tau, tau), 2000.0),
    ];
    let spots_ok = spot.iter().all(|(a, b)| close(*a, *b, 1e-9));
    let mut rng = ChaCha8Rng::seed_from_u64(0xa4c4);
    let mut agree = 0;
    for _ in 0..100 {
        let n = rng.gen_range(2..9);
        let mut boxes = Vec::new();
        let mut priors = Vec::new();
        let mut yaws = Vec::new();
        for i in 0..n {
            let id = if i == 0 { "table".to_string() } else { format!("obj_{i}") };
            // the table is the biggest box by far so selecting it would show
            let (w, h) = if i == 0 { (3000.0, 2000.0) } else { (rng.gen_range(20.0..400.0), rng.gen_range(20.0..400.0)) };
            boxes.push(bx(&id, 10.0, 10.0, w, h));
            priors.push(SizePrior::new(&id, rng.gen_range(0.05..0.5), rng.gen_range(0.05..0.5), 0.1).unwrap());
            yaws.push(rng.gen_range(0.0..360.0));
        }
        let cands: Vec<AnchorCandidate<'_>> = (0..n)
            .map(|i| AnchorCandidate {
                bbox: &boxes[i],
                prior: &priors[i],
                yaw_deg: yaws[i],
                is_table: i == 0,
            })
            .collect();
        let chosen = select_anchor(&cands, tau).unwrap();
        // brute force: scan every non-table candidate
        let mut best: Option<(f64, f64, String)> = None;
        for c in cands.iter().filter(|c| !c.is_table) {
            let s = c.score(tau);
            let key = (s.score, s.area_px, s.id.clone());
            let better = match &best {
                None => true,
                Some((bs, ba, bid)) => key.0 > *bs || (key.0 == *bs && (key.1 > *ba || (key.1 == *ba && key.2 < *bid))),
            };
            if better {
                best = Some(key);
            }
        }
        agree += usize::from(best.map(|b| b.2) == Some(chosen.id.clone()) && chosen.id != "table");
    }
    outcome(
        spots_ok && agree == 100,
        format!(
            "spot values {:?} vs (1000, 500, 2000); argmax agreement {agree}/100, table never chosen",
            spot.map(|s| s.0)
        ),
    )
}

struct SyntheticScene {
    input: TsaInput,
    alpha: f64,
    truth: BTreeMap<String, (Vector3<f64>, Vector3<f64>)>,
    chain: Vec<String>,
}

/// Table plus objects on a grid of cells spaced wider than any footprint
/// diagonal, the first three stacked into a chain in cell 0. Boxes are exact
/// yawed footprints.
fn synthetic_tsa_scene(rng: &mut ChaCha8Rng) -> SyntheticScene {
    let alpha = rng.gen_range(0.0008..0.003);
    let (tw, td, th) = (rng.gen_range(2.0..2.4), rng.gen_range(1.2..1.6), rng.gen_range(0.6..0.9));
    let (iw, ih) = (4096u32, 4096u32);
    let (tu, tv) = (iw as f64 / 2.0, ih as f64 / 2.0);
    let mut input = TsaInput {
        table_id: "table".into(),
        boxes: vec![bx("table", tu - tw / alpha / 2.0, tv - td / alpha / 2.0, tw / alpha, td / alpha)],
        priors: vec![SizePrior::new("table", tw, td, th).unwrap()],
        yaws: BTreeMap::new(),
        stacking: StackingGraph::default(),
    };
    let mut truth = BTreeMap::new();
    truth.insert("table".to_string(), (Vector3::zeros(), Vector3::new(tw, td, th)));
    let n: usize = rng.gen_range(4..9);
    let mut chain = Vec::new();
    let mut chain_top = th;
    for i in 0..n {
        let id = format!("obj_{i}");
        let (w, d, h) = (rng.gen_range(0.04..0.3), rng.gen_range(0.04..0.3), rng.gen_range(0.01..0.3));
        let yaw: f64 = rng.gen_range(0.0..360.0);
        let cell = i.saturating_sub(2);
        let (x, y) = (-0.675 + 0.45 * (cell % 4) as f64, 0.225 - 0.45 * (cell / 4) as f64);
        let z = if i < 3 { chain_top } else { th };
        if i < 3 {
            chain_top += h;
            if i > 0 {
                input.stacking.edges.push((id.clone(), format!("obj_{}", i - 1)));
            }
            chain.push(id.clone());
        }
        let (fw, fd) = footprint_dims(w, d, yaw);
        let (cu, cv) = (tu - x / alpha, tv + y / alpha);
        input.boxes.push(bx(&id, cu - fw / alpha / 2.0, cv - fd / alpha / 2.0, fw / alpha, fd / alpha));
        input.priors.push(SizePrior::new(&id, w, d, h).unwrap());
        input.yaws.insert(id.clone(), yaw);
        truth.insert(id, (Vector3::new(x, y, z), Vector3::new(w, d, h)));
    }
    SyntheticScene { input, alpha, truth, chain }
}

// 5. Scale and placement round trip on synthetic scenes.
fn tsa_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x75a);
    let cfg = TsaConfig::default();
    let (mut worst_alpha, mut worst_t, mut worst_s, mut worst_gap): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..10 {
        let sc = synthetic_tsa_scene(&mut rng);
        let r = run_tsa(&sc.input, &cfg).unwrap();
        worst_alpha = worst_alpha.max((r.alpha / sc.alpha - 1.0).abs());
        for p in &r.placements {
            let (t, s) = sc.truth[&p.id];
            worst_t = worst_t.max((p.translation.xy() - t.xy()).norm());
            worst_s = worst_s.max((p.scale.x / s.x - 1.0).abs()).max((p.scale.y / s.y - 1.0).abs());
        }
        for pair in sc.chain.windows(2) {
            let (lo, hi) = (r.placement(&pair[0]).unwrap(), r.placement(&pair[1]).unwrap());
            worst_gap = worst_gap.max((hi.translation.z - (lo.translation.z + lo.scale.z)).abs());
        }
        let table = r.placement("table").unwrap();
        let first = r.placement(&sc.chain[0]).unwrap();
        worst_gap = worst_gap.max((first.translation.z - table.scale.z).abs());
    }
    let ok = worst_alpha <= 0.01 && worst_t <= 0.01 && worst_s <= 0.02 && worst_gap <= 1e-6;
    outcome(
        ok,
        format!(
            "10 scenes: alpha err {:.2e} (≤1%), t err {:.2e} m (≤0.01), footprint err {:.2e} (≤2%), stack gap {:.1e} m (≤1e-6)",
            worst_alpha, worst_t, worst_s, worst_gap
        ),
    )
}

fn random_shape(rng: &mut ChaCha8Rng) -> TriangleMesh {
    if rng.gen_bool(0.5) {
        TriangleMesh::cuboid(Point3::new(-0.5, -0.5, 0.0), Point3::new(0.5, 0.5, 1.0))
    } else {
        // tetrahedron: non-box faces exercise the general triangle test
        TriangleMesh::new(
            vec![
                Point3::new(-0.5, -0.5, 0.0),
                Point3::new(0.5, -0.5, 0.0),
                Point3::new(0.0, 0.5, 0.0),
                Point3::new(0.1, 0.0, 1.0),
            ],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]],
        )
        .unwrap()
    }
}

fn random_collision_scene(rng: &mut ChaCha8Rng) -> SceneLayout {
    let table = TriangleMesh::cuboid(Point3::new(-0.5, -0.5, -0.05), Point3::new(0.5, 0.5, 0.0));
    let mut specs = vec![ModelSpec::new("table", "table", "t", CanonicalModel::new("table", &table))];
    let mut poses = vec![Pose::new(
        "table",
        RigidScaleTransform::new(0.0, Vector3::new(0.0, 0.0, -0.05), Vector3::new(1.0, 1.0, 0.05)).unwrap(),
    )];
    for i in 0..rng.gen_range(3..7) {
        let id = format!("o{i}");
        specs.push(ModelSpec::new(&id, "shape", "m", CanonicalModel::new(&id, &random_shape(rng))));
        let scale = Vector3::new(rng.gen_range(0.05..0.25), rng.gen_range(0.05..0.25), rng.gen_range(0.02..0.2));
        // some objects sink into or float above the table
        let z = [0.0, 0.0, 0.02, -0.01][rng.gen_range(0..4)];
        let t = Vector3::new(rng.gen_range(-0.25..0.25), rng.gen_range(-0.25..0.25), z);
        poses.push(Pose::new(&id, RigidScaleTransform::new(rng.gen_range(0.0..360.0), t, scale).unwrap()));
    }
    assemble("table", &specs, &poses).unwrap()
}

fn report(pairs: &[(&str, &str)], total: usize) -> CollisionReport {
    CollisionReport {
        pairs: pairs
            .iter()
            .map(|(a, b)| CollidingPair {
                a: a.to_string(),
                b: b.to_string(),
                penetration: 0.01,
                involves_table: false,
            })
            .collect(),
        total_pairs: total,
        table_pairs: 2,
    }
}

// 6. Collision detection and metrics.
fn collisions(fixture_scene: &SceneLayout) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc011);
    let (mut agree, mut hits, mut total) = (0, 0, 0);
    for _ in 0..20 {
        let scene = random_collision_scene(&mut rng);
        let fast = detect_collisions(&scene, Exec::Parallel);
        let slow = reference_detect_collisions(&scene);
        agree += usize::from(fast == slow);
        hits += slow.pairs.len();
        total += slow.total_pairs;
    }
    let m1 = collision_metrics(&[report(&[("a", "b")], 3)]).unwrap();
    let m2 = collision_metrics(&[report(&[("a", "b")], 3), report(&[], 3)]).unwrap();
    let hand = m1.col_o == 100.0 / 3.0 && m1.col_s == 100.0 && m2.col_o == 100.0 / 6.0 && m2.col_s == 50.0;

    // TSA-assembled synthetic scenes plus the pipeline's demo scene
    let mut fixture_reports = vec![detect_collisions(fixture_scene, Exec::Parallel)];
    let mut srng = ChaCha8Rng::seed_from_u64(0x75a);
    for _ in 0..10 {
        let sc = synthetic_tsa_scene(&mut srng);
        fixture_reports.push(detect_collisions(&assemble_tsa(&sc.input), Exec::Parallel));
    }
    let fm = collision_metrics(&fixture_reports).unwrap();
    let ok = agree == 20 && hand && fm.col_o == 0.0 && fm.col_s == 0.0;
    outcome(
        ok,
        format!(
            "oracle agreement {agree}/20 ({hits}/{total} colliding pairs); hand cases ({:.2}%, {:.0}%) and ({:.2}%, {:.0}%); \
             assembled fixtures Col_O {:.2}% Col_S {:.2}% over {} scenes",
            m1.col_o, m1.col_s, m2.col_o, m2.col_s, fm.col_o, fm.col_s, fixture_reports.len()
        ),
    )
}

/// Cuboid models placed by the alignment result.
fn assemble_tsa(input: &TsaInput) -> SceneLayout {
    let r = run_tsa(input, &TsaConfig::default()).unwrap();
    let unit = TriangleMesh::cuboid(Point3::new(-0.5, -0.5, 0.0), Point3::new(0.5, 0.5, 1.0));
    let specs: Vec<ModelSpec> = r
        .placements
        .iter()
        .map(|p| ModelSpec::new(&p.id, "box", "unit", CanonicalModel::new(&p.id, &unit)))
        .collect();
    let poses: Vec<Pose> = r
        .placements
        .iter()
        .map(|p| Pose::from_placement(p, &input.stacking).unwrap())
        .collect();
    assemble(&input.table_id, &specs, &poses).unwrap()
}

// 7. Camera sweep grid and best-view selection.
fn camera_sweep_protocol() -> Outcome {
    let scene = ground_truth_scene().unwrap();
    let cfg = SweepConfig::default();
    let views = camera_sweep(&scene, &cfg, Exec::Parallel).unwrap();
    let elevations: Vec<f64> = cfg.elevations();
    let distances: Vec<f64> = cfg.distances();
    let grid_ok = views.len() == 160
        && elevations == (0..10).map(|k| 90.0 - 10.0 * k as f64).collect::<Vec<_>>()
        && distances.len() == 16
        && distances.iter().enumerate().all(|(i, d)| close(*d, 1.0 + 0.1 * i as f64, 1e-12))
        && views.iter().enumerate().all(|(k, v)| {
            v.params.elevation_deg == elevations[k / 16] && v.params.distance_multiplier == distances[k % 16]
        });
    // reference: one sweep view with a small perturbation so the optimum is unique
    let mut reference: RgbImage = views[57].image.clone();
    reference.set(0, 0, [0.5, 0.5, 0.5]);
    let metric = MseMetric;
    let best = best_view(&views, &reference, &metric, Exec::Parallel).unwrap();
    // exhaustive argmin with the documented tie-break: lower elevation, then smaller distance
    let mut argmin = 0;
    for (k, v) in views.iter().enumerate() {
        let s = metric.score(&v.image, &reference).unwrap();
        let b = metric.score(&views[argmin].image, &reference).unwrap();
        let p = (v.params.elevation_deg, v.params.distance_multiplier);
        let q = (views[argmin].params.elevation_deg, views[argmin].params.distance_multiplier);
        if s < b || (s == b && p < q) {
            argmin = k;
        }
    }
    // identical images tie; the tie-break must pick the lowest elevation
    let blank = RgbImage::filled(cfg.image_size, cfg.image_size, [1.0; 3]);
    let flat: Vec<_> = views
        .iter()
        .map(|v| tablescene::evalharness::SweepView {
            params: v.params,
            image: blank.clone(),
        })
        .collect();
    let tie = best_view(&flat, &blank, &metric, Exec::Parallel).unwrap();
    let tie_ok = tie.score.elevation_deg == 0.0 && tie.score.distance_multiplier == 1.0;
    let scored = score_views(&views, &reference, &metric, Exec::Sequential).unwrap().len();
    outcome(
        grid_ok && best.index == argmin && tie_ok && scored == 160,
        format!(
            "{} views, grid ok {grid_ok}; best index {} vs exhaustive {argmin}; all-tie picks ({}°, {}×)",
            views.len(),
            best.index,
            tie.score.elevation_deg,
            tie.score.distance_multiplier
        ),
    )
}

fn run_pipeline(bundle: &Path, out: &Path, jobs: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_tablescene"))
        .args(["pipeline", "--mode", "replay", "--jobs", &jobs.to_string()])
        .arg("--bundle")
        .arg(bundle)
        .arg("--out")
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("pipeline --jobs {jobs} exited with {status}"))
    }
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_default()
}

// 8. End-to-end determinism on the bundled scene.
fn end_to_end(bundle: &Path, work: &Path) -> (Outcome, Option<SceneLayout>) {
    let runs = [("a", 1), ("b", 1), ("c", 8)];
    let mut secs = BTreeMap::new();
    for (name, jobs) in runs {
        let t0 = Instant::now();
        if let Err(e) = run_pipeline(bundle, &work.join(name), jobs) {
            return (outcome(false, e), None);
        }
        secs.insert(name, t0.elapsed().as_secs_f64());
    }
    let files = ["scene/layout.json", "manifest.json", "scene/scene.glb"];
    let same = |x: &str, y: &str| files.iter().all(|f| {
        let (p, q) = (read(&work.join(x).join(f)), read(&work.join(y).join(f)));
        !p.is_empty() && p == q
    });
    let repeat = same("a", "b");
    let jobs = same("a", "c");
    let layout = tablescene_cli::stages::load_scene(&work.join("a"), "scene/layout.json").ok();
    let objects = layout.as_ref().map_or(0, |s| s.objects().count());
    // single-threaded wall time limit 40 min, 8 jobs 15 min
    let time_ok = secs["a"] <= 2400.0 && secs["c"] <= 900.0;
    (
        outcome(
            repeat && jobs && objects == 9 && time_ok,
            format!(
                "repeat identical {repeat}, jobs 1 vs 8 identical {jobs}, {objects} objects + table; \
                 runs {:.0}s / {:.0}s / {:.0}s (jobs 1 ≤2400s, jobs 8 ≤900s)",
                secs["a"], secs["b"], secs["c"]
            ),
        ),
        layout,
    )
}

fn main() {
    let work = tempfile::tempdir().expect("tempdir");
    let bundle = work.path().join("bundle");
    write_demo_bundle(&bundle).expect("demo bundle");

    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let t0 = Instant::now();
    let (e2e, layout) = end_to_end(&bundle, work.path());
    let e2e_secs = t0.elapsed();
    results.push(("loss identities", timed(Duration::from_secs(1), loss_identities)));
    results.push(("rotation recovery", timed(Duration::from_secs(600), dro_recovery)));
    results.push(("distance transform", timed(Duration::from_secs(10), distance_transform_exact)));
    results.push(("anchor selection", timed(Duration::from_secs(1), anchor_selection)));
    results.push(("scale and placement", timed(Duration::from_secs(30), tsa_round_trip)));
    results.push((
        "collision metrics",
        match &layout {
            Some(scene) => timed(Duration::from_secs(120), || collisions(scene)),
            None => outcome(false, "no assembled demo scene"),
        },
    ));
    results.push(("camera sweep", timed(Duration::from_secs(120), camera_sweep_protocol)));
    results.push(("end-to-end determinism", Outcome {
        pass: e2e.pass,
        detail: format!("{}; total {:.0}s", e2e.detail, e2e_secs.as_secs_f64()),
    }));

    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("{} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {}/{} passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
