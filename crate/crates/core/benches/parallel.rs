//! Sequential versus data-parallel execution of the per-instance and
//! per-view loops. With one core the two should be close; the gap grows
//! with the worker count.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{Point3, Vector3};
use tablescene::dro::{estimate_batch, self_render_target, DroConfig, DroJob};
use tablescene::evalharness::{camera_sweep, SweepConfig};
use tablescene::geometry::{CanonicalModel, RigidScaleTransform, TriangleMesh};
use tablescene::losses::PatchMeanExtractor;
use tablescene::raster::Camera;
use tablescene::scene::{assemble, detect_collisions, ModelSpec, Pose, SceneLayout};
use tablescene::Exec;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn block() -> TriangleMesh {
    let a = TriangleMesh::cuboid(Point3::new(-0.3, -0.1, 0.0), Point3::new(0.3, 0.1, 0.15))
        .with_uniform_color([0.8, 0.2, 0.2]);
    let b = TriangleMesh::cuboid(Point3::new(0.1, 0.1, 0.0), Point3::new(0.3, 0.35, 0.3))
        .with_uniform_color([0.2, 0.3, 0.9]);
    TriangleMesh::merge(&[&a, &b])
}

fn grid_scene(n: usize) -> SceneLayout {
    let table = TriangleMesh::cuboid(Point3::new(-1.0, -1.0, -0.1), Point3::new(1.0, 1.0, 0.0));
    let mut specs = vec![ModelSpec::new("table", "table", "t", CanonicalModel::new("table", &table))];
    let mut poses = vec![Pose::new(
        "table",
        RigidScaleTransform::new(0.0, Vector3::new(0.0, 0.0, -0.1), Vector3::new(2.0, 2.0, 0.1)).unwrap(),
    )];
    let model = CanonicalModel::new("block", &block());
    for i in 0..n {
        let id = format!("b{i}");
        specs.push(ModelSpec::new(&id, "block", "m", model.clone()));
        let t = Vector3::new(-0.8 + 0.18 * (i % 9) as f64, -0.8 + 0.18 * (i / 9) as f64, 0.0);
        poses.push(Pose::new(&id, RigidScaleTransform::new(17.0 * i as f64, t, Vector3::new(0.2, 0.12, 0.1)).unwrap()));
    }
    assemble("table", &specs, &poses).unwrap()
}

fn bench_rotation(c: &mut Criterion) {
    let cfg = DroConfig {
        refine_steps: 10,
        candidate_count: 2,
        ..DroConfig::default()
    };
    let camera = Camera::default().with_image_size(128);
    let mesh = block();
    let targets: Vec<_> = (0..8)
        .map(|k| self_render_target(&mesh, &camera, 45.0 * k as f64 + 7.0, cfg.softness, Arc::new(PatchMeanExtractor)).unwrap())
        .collect();
    let jobs: Vec<DroJob<'_>> = targets.iter().map(|t| DroJob { mesh: &mesh, target: t, camera }).collect();
    let mut g = c.benchmark_group("rotation_batch_8");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(estimate_batch(&jobs, &cfg, exec)))
        });
    }
    g.finish();
}

fn bench_collisions(c: &mut Criterion) {
    let scene = grid_scene(60);
    let mut g = c.benchmark_group("collisions_60");
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(detect_collisions(&scene, exec)))
        });
    }
    g.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let scene = grid_scene(20);
    let cfg = SweepConfig {
        elevation_step_deg: 30.0,
        distance_count: 4,
        image_size: 128,
        ..SweepConfig::default()
    };
    let mut g = c.benchmark_group("camera_sweep_16");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(camera_sweep(&scene, &cfg, exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_rotation, bench_collisions, bench_sweep);
criterion_main!(benches);
