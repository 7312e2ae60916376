//! Export, reimport and re-export of an assembled scene through files.

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};
use tablescene::geometry::{glb_meshes_by_name, load_mesh, save_mesh, CanonicalModel, RigidScaleTransform, TriangleMesh};
use tablescene::scene::{assemble, export_scene, import_layout, ModelSpec, Pose};

#[test]
fn scene_survives_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let table = TriangleMesh::cuboid(Point3::new(0.0, 0.0, 0.0), Point3::new(1.2, 0.8, 0.75));
    let cup = TriangleMesh::cuboid(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.2))
        .with_uniform_color([0.9, 0.1, 0.1]);
    let mut meshes = BTreeMap::new();
    for (name, m) in [("table", &table), ("cup", &cup)] {
        let p = dir.path().join(format!("{name}.obj"));
        save_mesh(m, &p).unwrap();
        meshes.insert(name.to_string(), p);
    }
    let load = |name: &str| CanonicalModel::new(name, &load_mesh(&meshes[name]).unwrap());
    let specs = vec![
        ModelSpec::new("table_1", "table", "table", load("table")),
        ModelSpec::new("cup_1", "cup", "cup", load("cup")),
    ];
    let poses = vec![
        Pose::new("table_1", RigidScaleTransform::new(0.0, Vector3::zeros(), Vector3::new(1.2, 0.8, 0.75)).unwrap()),
        Pose::new(
            "cup_1",
            RigidScaleTransform::new(33.3, Vector3::new(0.1, -0.2, 0.75), Vector3::new(0.08, 0.08, 0.1)).unwrap(),
        ),
    ];
    let scene = assemble("table_1", &specs, &poses).unwrap();
    let first = export_scene(&scene, &dir.path().join("a")).unwrap();

    let text = std::fs::read_to_string(&first.layout).unwrap();
    let again = import_layout(&text, |inst| Ok(load(&inst.mesh))).unwrap();
    let second = export_scene(&again, &dir.path().join("b")).unwrap();
    assert_eq!(std::fs::read(&first.layout).unwrap(), std::fs::read(&second.layout).unwrap());

    let glb = glb_meshes_by_name(&std::fs::read(&second.glb).unwrap()).unwrap();
    assert_eq!(glb.keys().collect::<Vec<_>>(), ["cup_1", "table_1"]);
    let cup_bounds = glb["cup_1"].aabb();
    let expected = again.instance("cup_1").unwrap().bounds;
    assert!((cup_bounds.min - expected.min).norm() < 1e-5);
    assert!((cup_bounds.max - expected.max).norm() < 1e-5);
    assert!((cup_bounds.min.z - 0.75).abs() < 1e-6);
}
