//! Scene assembly, collision detection, collision metrics, instance swaps
//! and export.
//!
//! A [`SceneLayout`] is immutable once assembled; every editing operation
//! returns a new scene.

pub mod collision;
mod export;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{apply_transform, Aabb, CanonicalModel, RigidScaleTransform, TriangleMesh};
use crate::tsa::{Placement, StackingGraph};

pub use collision::{instances_collide, reference_meshes_collide, CONTACT_TOLERANCE};
pub use export::{
    export_scene, import_layout, layout_json, ExportPaths, LayoutDocument, LayoutInstance,
    LAYOUT_SCHEMA,
};

/// A canonical model plus the identity it is placed under.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub id: String,
    pub label: String,
    /// Opaque reference to the mesh source (a path or digest), carried into
    /// exports.
    pub mesh_ref: String,
    pub model: Arc<CanonicalModel>,
}

impl ModelSpec {
    pub fn new(
        id: impl Into<String>,
        label: impl Into<String>,
        mesh_ref: impl Into<String>,
        model: CanonicalModel,
    ) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            mesh_ref: mesh_ref.into(),
            model: Arc::new(model),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub id: String,
    pub transform: RigidScaleTransform,
    /// Instances this one rests on; empty means the table surface (or the
    /// floor for the table itself).
    pub supports: Vec<String>,
}

impl Pose {
    pub fn new(id: impl Into<String>, transform: RigidScaleTransform) -> Self {
        Self {
            id: id.into(),
            transform,
            supports: Vec::new(),
        }
    }

    /// Pose from an alignment placement; supports come from the stacking
    /// graph.
    pub fn from_placement(p: &Placement, stacking: &StackingGraph) -> Result<Self> {
        let mut supports: Vec<String> =
            stacking.supports_of(&p.id).into_iter().map(String::from).collect();
        supports.sort();
        supports.dedup();
        Ok(Self {
            id: p.id.clone(),
            transform: RigidScaleTransform::new(p.yaw_deg, p.translation, p.scale)?,
            supports,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SceneInstance {
    pub id: String,
    pub label: String,
    pub mesh_ref: String,
    pub model: Arc<CanonicalModel>,
    pub transform: RigidScaleTransform,
    pub supports: Vec<String>,
    pub is_table: bool,
    /// Model mesh after `transform`.
    pub world: TriangleMesh,
    pub bounds: Aabb,
}

impl SceneInstance {
    fn build(spec: &ModelSpec, pose: &Pose, is_table: bool) -> Result<Self> {
        let world = apply_transform(spec.model.mesh(), &pose.transform)?;
        let bounds = world.aabb();
        Ok(Self {
            id: spec.id.clone(),
            label: spec.label.clone(),
            mesh_ref: spec.mesh_ref.clone(),
            model: Arc::clone(&spec.model),
            transform: pose.transform,
            supports: pose.supports.clone(),
            is_table,
            world,
            bounds,
        })
    }

    fn spec(&self) -> ModelSpec {
        ModelSpec {
            id: self.id.clone(),
            label: self.label.clone(),
            mesh_ref: self.mesh_ref.clone(),
            model: Arc::clone(&self.model),
        }
    }

    fn pose(&self) -> Pose {
        Pose {
            id: self.id.clone(),
            transform: self.transform,
            supports: self.supports.clone(),
        }
    }

    fn footprint_area(&self) -> f64 {
        let e = self.bounds.extents();
        e.x * e.y
    }
}

#[derive(Debug, Clone)]
pub struct SceneLayout {
    table_id: String,
    instances: Vec<SceneInstance>,
    /// Top of the table's world AABB.
    pub surface_height: f64,
    /// Table AABB center projected onto the surface.
    pub table_center: Point3<f64>,
}

/// Places each model under the pose with the same id.
///
/// Instance order follows `models`.
pub fn assemble(table_id: &str, models: &[ModelSpec], poses: &[Pose]) -> Result<SceneLayout> {
    let mut by_id: BTreeMap<&str, &Pose> = BTreeMap::new();
    for p in poses {
        if by_id.insert(p.id.as_str(), p).is_some() {
            return Err(Error::DuplicateInstance(p.id.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    for m in models {
        if !seen.insert(m.id.as_str()) {
            return Err(Error::DuplicateInstance(m.id.clone()));
        }
    }
    if !seen.contains(table_id) {
        return Err(Error::MissingTable);
    }
    let model_ids: BTreeSet<&str> = seen;
    let pose_ids: BTreeSet<&str> = by_id.keys().copied().collect();
    if model_ids != pose_ids {
        let only_models: Vec<_> = model_ids.difference(&pose_ids).collect();
        let only_poses: Vec<_> = pose_ids.difference(&model_ids).collect();
        return Err(Error::IdMismatch(format!(
            "models without pose {only_models:?}, poses without model {only_poses:?}"
        )));
    }
    for p in poses {
        for s in &p.supports {
            if !model_ids.contains(s.as_str()) {
                return Err(Error::UnknownInstance(s.clone()));
            }
        }
    }
    let instances = models
        .iter()
        .map(|m| SceneInstance::build(m, by_id[m.id.as_str()], m.id == table_id))
        .collect::<Result<Vec<_>>>()?;
    Ok(SceneLayout::from_instances(table_id.to_string(), instances))
}

impl SceneLayout {
    fn from_instances(table_id: String, instances: Vec<SceneInstance>) -> Self {
        let table = instances
            .iter()
            .find(|i| i.is_table)
            .expect("assembled scene has a table");
        let c = table.bounds.center();
        let surface_height = table.bounds.max.z;
        Self {
            table_center: Point3::new(c.x, c.y, surface_height),
            surface_height,
            table_id,
            instances,
        }
    }

    pub fn table_id(&self) -> &str {
        &self.table_id
    }

    pub fn instances(&self) -> &[SceneInstance] {
        &self.instances
    }

    pub fn instance(&self, id: &str) -> Option<&SceneInstance> {
        self.instances.iter().find(|i| i.id == id)
    }

    pub fn table(&self) -> &SceneInstance {
        self.instance(&self.table_id).expect("table present")
    }

    /// Non-table instances.
    pub fn objects(&self) -> impl Iterator<Item = &SceneInstance> {
        self.instances.iter().filter(|i| !i.is_table)
    }

    pub fn aabb(&self) -> Aabb {
        self.instances
            .iter()
            .map(|i| i.bounds)
            .reduce(|a, b| a.union(&b))
            .expect("assembled scene is non-empty")
    }

    /// Half the diagonal of the scene AABB.
    pub fn radius(&self) -> f64 {
        self.aabb().radius()
    }

    /// All instance meshes merged, in instance order.
    pub fn merged_mesh(&self) -> TriangleMesh {
        let meshes: Vec<&TriangleMesh> = self.instances.iter().map(|i| &i.world).collect();
        TriangleMesh::merge(&meshes)
    }

    fn specs_and_poses(&self) -> (Vec<ModelSpec>, Vec<Pose>) {
        self.instances.iter().map(|i| (i.spec(), i.pose())).unzip()
    }

    fn with_instance(&self, idx: usize, inst: SceneInstance) -> SceneLayout {
        let mut instances = self.instances.clone();
        instances[idx] = inst;
        SceneLayout::from_instances(self.table_id.clone(), instances)
    }

    fn index_of(&self, id: &str) -> Result<usize> {
        self.instances
            .iter()
            .position(|i| i.id == id)
            .ok_or_else(|| Error::UnknownInstance(id.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollidingPair {
    /// Lexicographically smaller id.
    pub a: String,
    pub b: String,
    /// Smallest AABB overlap over the three axes (meters). An upper bound on
    /// the distance needed to separate the pair along one axis.
    pub penetration: f64,
    pub involves_table: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    /// Sorted by `(a, b)`.
    pub pairs: Vec<CollidingPair>,
    /// All unordered instance pairs, table pairs included.
    pub total_pairs: usize,
    /// Of `total_pairs`, how many involve the table.
    pub table_pairs: usize,
}

impl CollisionReport {
    pub fn colliding_table_pairs(&self) -> usize {
        self.pairs.iter().filter(|p| p.involves_table).count()
    }

    pub fn is_clean(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

fn make_report(
    scene: &SceneLayout,
    pairs: &[(usize, usize)],
    hits: Vec<bool>,
) -> CollisionReport {
    let inst = &scene.instances;
    let mut out: Vec<CollidingPair> = pairs
        .iter()
        .zip(hits)
        .filter(|(_, hit)| *hit)
        .map(|(&(i, j), _)| {
            let (x, y) = (&inst[i], &inst[j]);
            let (a, b) = if x.id <= y.id { (x, y) } else { (y, x) };
            CollidingPair {
                a: a.id.clone(),
                b: b.id.clone(),
                penetration: x.bounds.overlap(&y.bounds).min().max(0.0),
                involves_table: x.is_table || y.is_table,
            }
        })
        .collect();
    out.sort_by(|p, q| (&p.a, &p.b).cmp(&(&q.a, &q.b)));
    CollisionReport {
        pairs: out,
        total_pairs: pairs.len(),
        table_pairs: inst.len().saturating_sub(1),
    }
}

/// Broad phase on AABBs with the contact tolerance, then exact triangle
/// tests plus containment on the survivors.
pub fn detect_collisions(scene: &SceneLayout, exec: Exec) -> CollisionReport {
    let pairs = all_pairs(scene.instances.len());
    let inst = &scene.instances;
    let hits = exec.map(&pairs, |&(i, j)| {
        collision::boxes_overlap_beyond_contact(&inst[i].bounds, &inst[j].bounds)
            && collision::meshes_collide(&inst[i].world, &inst[j].world)
    });
    make_report(scene, &pairs, hits)
}

/// Exhaustive all-pairs, all-triangle-pairs check. Slow; for validation.
pub fn reference_detect_collisions(scene: &SceneLayout) -> CollisionReport {
    let pairs = all_pairs(scene.instances.len());
    let inst = &scene.instances;
    let hits = pairs
        .iter()
        .map(|&(i, j)| reference_meshes_collide(&inst[i].world, &inst[j].world))
        .collect();
    make_report(scene, &pairs, hits)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionMetrics {
    /// Percentage of colliding pairs, pooled over all scenes.
    pub col_o: f64,
    /// Percentage of scenes with at least one colliding pair.
    pub col_s: f64,
}

pub fn collision_metrics(reports: &[CollisionReport]) -> Result<CollisionMetrics> {
    if reports.is_empty() {
        return Err(Error::InvalidParameter("no collision reports".into()));
    }
    let colliding: usize = reports.iter().map(|r| r.pairs.len()).sum();
    let total: usize = reports.iter().map(|r| r.total_pairs).sum();
    let dirty = reports.iter().filter(|r| !r.pairs.is_empty()).count();
    Ok(CollisionMetrics {
        col_o: if total == 0 {
            0.0
        } else {
            100.0 * colliding as f64 / total as f64
        },
        col_s: 100.0 * dirty as f64 / reports.len() as f64,
    })
}

/// Replaces the model of `id`, keeping its transform and supports.
///
/// With `refit`, the new model keeps the old footprint area and height but
/// takes its own width/depth aspect. Without it, the instance's world extents
/// stay exactly the old scale.
pub fn swap_instance(
    scene: &SceneLayout,
    id: &str,
    label: &str,
    mesh_ref: &str,
    model: Arc<CanonicalModel>,
    refit: bool,
) -> Result<SceneLayout> {
    let idx = scene.index_of(id)?;
    let old = &scene.instances[idx];
    let mut transform = old.transform;
    if refit {
        let e = model.extents();
        let s = old.transform.scale();
        let aspect = e.x / e.y;
        let area = s.x * s.y;
        transform = RigidScaleTransform::new(
            old.transform.yaw_deg(),
            old.transform.translation(),
            Vector3::new((area * aspect).sqrt(), (area / aspect).sqrt(), s.z),
        )?;
    }
    let spec = ModelSpec {
        id: id.to_string(),
        label: label.to_string(),
        mesh_ref: mesh_ref.to_string(),
        model,
    };
    let pose = Pose {
        id: id.to_string(),
        transform,
        supports: old.supports.clone(),
    };
    let inst = SceneInstance::build(&spec, &pose, old.is_table)?;
    Ok(scene.with_instance(idx, inst))
}

#[derive(Debug, Clone)]
pub struct ResolveOutcome {
    pub scene: SceneLayout,
    pub converged: bool,
    pub iterations: usize,
    /// Horizontal displacement applied per moved instance (meters).
    pub displacements: BTreeMap<String, Vector3<f64>>,
}

/// Ids of `root` and everything stacked on it, transitively.
fn stacked_closure(scene: &SceneLayout, root: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::from([root.to_string()]);
    loop {
        let before = out.len();
        for inst in &scene.instances {
            if inst.supports.iter().any(|s| out.contains(s)) {
                out.insert(inst.id.clone());
            }
        }
        if out.len() == before {
            return out;
        }
    }
}

fn translate_group(
    scene: &SceneLayout,
    group: &BTreeSet<String>,
    delta: Vector3<f64>,
) -> Result<SceneLayout> {
    let (specs, mut poses) = scene.specs_and_poses();
    for p in poses.iter_mut().filter(|p| group.contains(&p.id)) {
        p.transform = p.transform.with_translation(p.transform.translation() + delta);
    }
    assemble(&scene.table_id, &specs, &poses)
}

/// Pushes colliding object pairs apart horizontally.
///
/// Each step takes the first colliding non-table pair, moves the instance
/// with the smaller footprint (and whatever is stacked on it) along the
/// horizontal axis of least AABB overlap by that overlap plus the contact
/// tolerance. A move that would raise the number of colliding pairs is
/// rejected in favour of the next option (other axis, then the other
/// instance); if all are rejected the pass stops unconverged. Table pairs
/// are never moved on. Yaw and scale are untouched.
pub fn resolve_overlaps(scene: &SceneLayout, max_iters: usize, exec: Exec) -> ResolveOutcome {
    let mut current = scene.clone();
    let mut displacements: BTreeMap<String, Vector3<f64>> = BTreeMap::new();
    let mut report = detect_collisions(&current, exec);
    for iter in 0..max_iters {
        if report.is_clean() {
            return ResolveOutcome {
                scene: current,
                converged: true,
                iterations: iter,
                displacements,
            };
        }
        let Some(pair) = report.pairs.iter().find(|p| !p.involves_table) else {
            break;
        };
        let a = current.instance(&pair.a).expect("reported id exists");
        let b = current.instance(&pair.b).expect("reported id exists");
        let (small, large) = if b.footprint_area() <= a.footprint_area() {
            (b, a)
        } else {
            (a, b)
        };
        let overlap = small.bounds.overlap(&large.bounds);
        let (first_axis, second_axis) = if overlap.x <= overlap.y { (0, 1) } else { (1, 0) };
        let mut options = Vec::with_capacity(4);
        for (mover, other) in [(small, large), (large, small)] {
            for axis in [first_axis, second_axis] {
                let side = mover.bounds.center()[axis] - other.bounds.center()[axis];
                let sign = if side < 0.0 { -1.0 } else { 1.0 };
                let mut delta = Vector3::zeros();
                delta[axis] = sign * (overlap[axis] + CONTACT_TOLERANCE);
                options.push((mover.id.clone(), delta));
            }
        }
        let before = report.pairs.len();
        let mut accepted = None;
        for (mover, delta) in options {
            let group = stacked_closure(&current, &mover);
            if group.contains(current.table_id()) {
                continue;
            }
            let Ok(next) = translate_group(&current, &group, delta) else {
                continue;
            };
            let next_report = detect_collisions(&next, exec);
            if next_report.pairs.len() <= before {
                accepted = Some((next, next_report, group, delta));
                break;
            }
        }
        let Some((next, next_report, group, delta)) = accepted else {
            break;
        };
        for id in group {
            *displacements.entry(id).or_insert_with(Vector3::zeros) += delta;
        }
        current = next;
        report = next_report;
    }
    let converged = report.is_clean();
    ResolveOutcome {
        scene: current,
        converged,
        iterations: max_iters,
        displacements,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn cube_model(name: &str) -> Arc<CanonicalModel> {
        let m = TriangleMesh::cuboid(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0));
        Arc::new(CanonicalModel::new(name, &m))
    }

    fn spec(id: &str, model: &Arc<CanonicalModel>) -> ModelSpec {
        ModelSpec {
            id: id.into(),
            label: id.into(),
            mesh_ref: format!("{id}.obj"),
            model: Arc::clone(model),
        }
    }

    pub(crate) fn pose(id: &str, yaw: f64, t: [f64; 3], s: [f64; 3]) -> Pose {
        Pose::new(
            id,
            RigidScaleTransform::new(yaw, Vector3::from(t), Vector3::from(s)).unwrap(),
        )
    }

    /// Thin table slab top at z = 0, plus unit cubes at the given x offsets.
    pub(crate) fn cubes_on_table(xs: &[f64]) -> SceneLayout {
        let cube = cube_model("cube");
        let mut specs = vec![spec("table", &cube)];
        let mut poses = vec![pose("table", 0.0, [0.0, 0.0, -0.05], [10.0, 10.0, 0.05])];
        for (k, &x) in xs.iter().enumerate() {
            let id = format!("cube{k}");
            specs.push(spec(&id, &cube));
            poses.push(pose(&id, 0.0, [x, 0.0, 0.0], [1.0, 1.0, 1.0]));
        }
        assemble("table", &specs, &poses).unwrap()
    }

    #[test]
    fn assemble_contracts() {
        let only_table = cubes_on_table(&[]);
        assert_eq!(only_table.instances().len(), 1);
        assert_eq!(only_table.surface_height, 0.0);

        let cube = cube_model("cube");
        let specs = vec![spec("table", &cube), spec("a", &cube)];
        let poses = vec![pose("table", 0.0, [0.0; 3], [1.0; 3])];
        assert!(matches!(assemble("table", &specs, &poses), Err(Error::IdMismatch(_))));
        assert!(matches!(
            assemble("desk", &specs, &[poses[0].clone(), pose("a", 0.0, [0.0; 3], [1.0; 3])]),
            Err(Error::MissingTable)
        ));

        let s = assemble(
            "table",
            &specs,
            &[poses[0].clone(), pose("a", 0.0, [3.0, 0.0, 1.0], [0.3, 0.2, 0.1])],
        )
        .unwrap();
        let e = s.instance("a").unwrap().bounds.extents();
        assert!((e - Vector3::new(0.3, 0.2, 0.1)).norm() < 1e-12);
    }

    #[test]
    fn cube_collisions() {
        let apart = cubes_on_table(&[0.0, 2.0]);
        assert!(detect_collisions(&apart, Exec::Sequential).is_clean());
        let hit = cubes_on_table(&[0.0, 0.5]);
        let r = detect_collisions(&hit, Exec::Sequential);
        assert_eq!(r.pairs.len(), 1);
        assert_eq!((r.pairs[0].a.as_str(), r.pairs[0].b.as_str()), ("cube0", "cube1"));
        assert!((r.pairs[0].penetration - 0.5).abs() < 1e-12);
        assert_eq!(r.total_pairs, 3);
        assert_eq!(r.table_pairs, 2);
        // resting on the table surface is contact only
        assert_eq!(r.colliding_table_pairs(), 0);
        assert_eq!(r, detect_collisions(&hit, Exec::Parallel));
        assert_eq!(r, reference_detect_collisions(&hit));
    }

    fn report(total: usize, colliding: usize) -> CollisionReport {
        CollisionReport {
            pairs: (0..colliding)
                .map(|k| CollidingPair {
                    a: format!("a{k}"),
                    b: format!("b{k}"),
                    penetration: 0.1,
                    involves_table: false,
                })
                .collect(),
            total_pairs: total,
            table_pairs: 0,
        }
    }

    #[test]
    fn metric_arithmetic() {
        let m = collision_metrics(&[report(3, 0)]).unwrap();
        assert_eq!((m.col_o, m.col_s), (0.0, 0.0));
        let m = collision_metrics(&[report(3, 1)]).unwrap();
        assert_eq!(m.col_o, 100.0 / 3.0);
        assert_eq!(m.col_s, 100.0);
        let m = collision_metrics(&[report(3, 0), report(3, 1)]).unwrap();
        assert_eq!(m.col_o, 100.0 / 6.0);
        assert_eq!(m.col_s, 50.0);
        let swapped = collision_metrics(&[report(3, 1), report(3, 0)]).unwrap();
        assert_eq!(m, swapped);
        assert!(collision_metrics(&[]).is_err());
    }

    #[test]
    fn swap_roundtrip() {
        let scene = cubes_on_table(&[0.0, 2.0]);
        let tall = Arc::new(CanonicalModel::new(
            "tall",
            &TriangleMesh::cuboid(Point3::new(0.0, 0.0, 0.0), Point3::new(2.0, 1.0, 3.0)),
        ));
        let swapped = swap_instance(&scene, "cube1", "tall", "tall.obj", tall.clone(), false).unwrap();
        let old = scene.instance("cube1").unwrap();
        let new = swapped.instance("cube1").unwrap();
        assert_eq!(new.transform, old.transform);
        assert!((new.bounds.extents() - old.transform.scale()).norm() < 1e-12);
        assert_eq!(swapped.instance("cube0").unwrap().world, scene.instance("cube0").unwrap().world);

        let back =
            swap_instance(&swapped, "cube1", "cube1", "cube1.obj", old.model.clone(), false).unwrap();
        assert_eq!(back.instance("cube1").unwrap().world, old.world);
        assert_eq!(back.instance("cube1").unwrap().transform, old.transform);

        let refit = swap_instance(&scene, "cube1", "tall", "tall.obj", tall, true).unwrap();
        let e = refit.instance("cube1").unwrap().bounds.extents();
        assert!((e.x * e.y - 1.0).abs() < 1e-12);
        assert!((e.x / e.y - 2.0).abs() < 1e-12);
        assert!((e.z - 1.0).abs() < 1e-12);

        assert!(matches!(
            swap_instance(&scene, "nope", "x", "x", cube_model("c"), false),
            Err(Error::UnknownInstance(_))
        ));
    }

    #[test]
    fn resolve_separates_small_overlap() {
        let clean = cubes_on_table(&[0.0, 2.0]);
        let out = resolve_overlaps(&clean, 10, Exec::Sequential);
        assert!(out.converged);
        assert!(out.displacements.is_empty());

        let scene = cubes_on_table(&[0.0, 0.9]);
        let out = resolve_overlaps(&scene, 10, Exec::Sequential);
        assert!(out.converged);
        assert!(detect_collisions(&out.scene, Exec::Sequential).is_clean());
        let total: f64 = out.displacements.values().map(|d| d.norm()).sum();
        assert!(total <= 0.1 + 2.0 * CONTACT_TOLERANCE + 1e-12, "{total}");
        let a = out.scene.instance("cube0").unwrap().bounds;
        let b = out.scene.instance("cube1").unwrap().bounds;
        assert!(-a.overlap(&b).x >= CONTACT_TOLERANCE - 1e-12);
        for (x, y) in scene.instances().iter().zip(out.scene.instances()) {
            assert_eq!(x.transform.yaw_deg(), y.transform.yaw_deg());
            assert_eq!(x.transform.scale(), y.transform.scale());
        }
    }

    #[test]
    fn stacked_group_moves_together() {
        let cube = cube_model("cube");
        let specs = vec![spec("table", &cube), spec("a", &cube), spec("b", &cube), spec("c", &cube)];
        let mut top = pose("c", 0.0, [0.7, 0.0, 0.5], [0.2, 0.2, 0.2]);
        top.supports = vec!["b".into()];
        let poses = vec![
            pose("table", 0.0, [0.0, 0.0, -0.05], [10.0, 10.0, 0.05]),
            pose("a", 0.0, [0.0; 3], [1.0, 1.0, 1.0]),
            pose("b", 0.0, [0.6, 0.0, 0.0], [0.5, 0.5, 0.5]),
            top,
        ];
        let scene = assemble("table", &specs, &poses).unwrap();
        let out = resolve_overlaps(&scene, 10, Exec::Sequential);
        assert!(out.converged);
        assert_eq!(out.displacements["b"], out.displacements["c"]);
        assert!(!out.displacements.contains_key("a"));
    }
}
