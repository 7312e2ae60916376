//! Binary-level behavior: exit codes, manifests, stage reruns and editing.
//! Runs use a reduced refinement budget to keep the suite fast.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tablescene_cli::demo::write_demo_bundle;
use tablescene_cli::manifest::{RunManifest, StageStatus};
use tablescene_cli::{EXIT_REPLAY_MISS, EXIT_STAGE_FAILURE, EXIT_VALIDATION};

const FAST_CONFIG: &str = "[dro]\nrefine_steps = 8\ncandidate_count = 2\n";

fn committed_bundle() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo_scene")
}

fn tablescene(args: &[&str], paths: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tablescene"));
    cmd.args(args);
    for (flag, p) in paths {
        cmd.arg(flag).arg(p);
    }
    cmd.output().expect("spawn tablescene")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        write_demo_bundle(&dir.path().join("bundle")).unwrap();
        std::fs::write(dir.path().join("fast.toml"), FAST_CONFIG).unwrap();
        Self { dir }
    }

    fn bundle(&self) -> PathBuf {
        self.dir.path().join("bundle")
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("run")
    }

    fn stage(&self, args: &[&str]) -> Output {
        let (bundle, out, cfg) = (self.bundle(), self.out(), self.dir.path().join("fast.toml"));
        tablescene(args, &[("--bundle", &bundle), ("--out", &out), ("--config", &cfg)])
    }

    fn read(&self, rel: &str) -> Vec<u8> {
        std::fs::read(self.out().join(rel)).unwrap()
    }

    fn manifest(&self) -> RunManifest {
        RunManifest::load(&self.out()).unwrap().expect("manifest")
    }
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn committed_bundle_matches_generator() {
    let dir = tempfile::tempdir().unwrap();
    write_demo_bundle(dir.path()).unwrap();
    let (fresh, committed) = (files_under(dir.path()), files_under(&committed_bundle()));
    assert_eq!(fresh, committed);
    for f in &fresh {
        let a = std::fs::read(dir.path().join(f)).unwrap();
        let b = std::fs::read(committed_bundle().join(f)).unwrap();
        assert!(a == b, "{} differs; regenerate with `tablescene demo`", f.display());
    }
}

#[test]
fn replay_with_empty_store_lists_every_missing_fixture() {
    let fx = Fixture::new();
    std::fs::remove_dir_all(fx.bundle().join("fixtures")).unwrap();
    let o = fx.stage(&["pipeline"]);
    assert_eq!(code(&o), EXIT_REPLAY_MISS);
    let err = String::from_utf8_lossy(&o.stderr);
    // 10 up-axis hints, 10 size priors, camera init, stacking order
    assert!(err.contains("22 fixture(s) missing"), "{err}");
    assert!(err.matches("size_prior").count() >= 10, "{err}");
    assert!(err.matches("up_axis_hint").count() >= 10, "{err}");
    assert!(err.contains("camera_init") && err.contains("stacking_order"), "{err}");
    assert!(!fx.out().join("canonical").exists(), "no stage may run after a failed preflight");
}

#[test]
fn invalid_inputs_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let o = tablescene(&["tsa"], &[("--bundle", &missing), ("--out", dir.path())]);
    assert_eq!(code(&o), EXIT_VALIDATION);

    let fx = Fixture::new();
    std::fs::write(fx.dir.path().join("bad.toml"), "[dro]\nno_such_key = 1\n").unwrap();
    let bad = fx.dir.path().join("bad.toml");
    let o = tablescene(&["tsa"], &[("--bundle", &fx.bundle()), ("--out", &fx.out()), ("--config", &bad)]);
    assert_eq!(code(&o), EXIT_VALIDATION);

    let o = fx.stage(&["dro", "--instance", "table_1"]);
    assert_eq!(code(&o), EXIT_VALIDATION);
}

#[test]
fn single_instance_dro_is_byte_stable() {
    let fx = Fixture::new();
    assert_eq!(code(&fx.stage(&["canonicalize"])), 0);
    assert_eq!(code(&fx.stage(&["dro", "--instance", "toy_car_1"])), 0);
    let first = fx.read("dro/toy_car_1.json");
    assert_eq!(code(&fx.stage(&["dro", "--instance", "toy_car_1"])), 0);
    assert_eq!(first, fx.read("dro/toy_car_1.json"));
    let rec = &fx.manifest().stages["dro"];
    assert_eq!(rec.status, StageStatus::Ok);
    assert_eq!(rec.outputs.len(), 1);
    assert!(!fx.out().join("dro/mug_1.json").exists());
}

#[test]
fn stage_failure_names_the_instance_and_keeps_partial_results() {
    let fx = Fixture::new();
    std::fs::write(fx.bundle().join("crops/mug_1.png"), b"not a png").unwrap();
    assert_eq!(code(&fx.stage(&["canonicalize"])), 0);
    let o = fx.stage(&["dro"]);
    assert_eq!(code(&o), EXIT_STAGE_FAILURE);
    let rec = &fx.manifest().stages["dro"];
    assert_eq!(rec.status, StageStatus::Failed);
    assert_eq!(rec.failed_instance.as_deref(), Some("mug_1"));
    assert!(fx.out().join("dro/toy_car_1.json").exists(), "other instances keep their results");
    assert_eq!(fx.manifest().stages["canonicalize"].status, StageStatus::Ok);
}

#[test]
fn pipeline_rerun_evaluate_and_swap() {
    let fx = Fixture::new();
    let o = fx.stage(&["pipeline", "--jobs", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let layout: serde_json::Value = serde_json::from_slice(&fx.read("scene/layout.json")).unwrap();
    let instances = layout["instances"].as_array().unwrap();
    assert_eq!(instances.len(), 10);
    assert_eq!(instances.iter().filter(|i| i["is_table"] == true).count(), 1);
    let phone = instances.iter().find(|i| i["id"] == "phone_1").unwrap();
    assert_eq!(phone["supports"], serde_json::json!(["book_1"]));

    // every listed output exists with the recorded digest
    let m = fx.manifest();
    for stage in ["canonicalize", "dro", "tsa", "assemble"] {
        let rec = &m.stages[stage];
        assert_eq!(rec.status, StageStatus::Ok, "{stage}");
        for o in &rec.outputs {
            let sha = tablescene_cli::bundle::sha256_file(&fx.out().join(&o.path)).unwrap();
            assert_eq!(sha, o.sha256, "{}", o.path);
        }
    }

    // isolated reruns reproduce their bytes
    let before = (fx.read("tsa/result.json"), fx.read("scene/layout.json"), fx.read("manifest.json"));
    assert_eq!(code(&fx.stage(&["tsa"])), 0);
    assert_eq!(code(&fx.stage(&["assemble"])), 0);
    assert_eq!(before, (fx.read("tsa/result.json"), fx.read("scene/layout.json"), fx.read("manifest.json")));

    let o = fx.stage(&["evaluate", "--sweep"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sweep: serde_json::Value = serde_json::from_slice(&fx.read("eval/sweep.json")).unwrap();
    assert_eq!(sweep["views"].as_array().unwrap().len(), 160);
    assert!(fx.out().join("eval/contact_sheet.png").exists());

    let mesh = fx.dir.path().join("tall_mug.obj");
    std::fs::write(
        &mesh,
        tablescene::geometry::write_obj(&tablescene::geometry::TriangleMesh::cuboid(
            nalgebra::Point3::new(0.0, 0.0, 0.0),
            nalgebra::Point3::new(1.0, 2.0, 3.0),
        )),
    )
    .unwrap();
    let o = tablescene(
        &["swap", "--instance", "mug_1", "--label", "tall mug", "--refit"],
        &[("--out", &fx.out()), ("--mesh", &mesh)],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let swapped: serde_json::Value = serde_json::from_slice(&fx.read("swap/layout.json")).unwrap();
    let mug = swapped["instances"].as_array().unwrap().iter().find(|i| i["id"] == "mug_1").unwrap().clone();
    assert_eq!(mug["label"], "tall mug");
    assert_eq!(mug["mesh"], "canonical/swap_mug_1.obj");
    assert_eq!(fx.manifest().stages["swap"].status, StageStatus::Ok);
    // the original layout is untouched
    assert_eq!(before.1, fx.read("scene/layout.json"));
}
