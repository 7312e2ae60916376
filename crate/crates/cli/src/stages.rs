//! Pipeline stages. Each reads the bundle and earlier outputs from the run
//! directory, writes its own outputs, and records them in the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde_json::json;
use tablescene::dro::{debug_triptych, estimate_rotation, RotationResult};
use tablescene::evalharness::{
    best_view, camera_sweep, contact_sheet, FeatureDistanceMetric, ImageMetric, MseMetric,
    SweepReport,
};
use tablescene::geometry::{load_mesh, parse_obj, write_obj, CanonicalModel, TriangleMesh, UpAxisHint};
use tablescene::image::{GrayImage, RgbImage};
use tablescene::jsonfmt::to_stable_string;
use tablescene::losses::{FeatureExtractor, PatchMeanExtractor, TargetViews};
use tablescene::raster::Camera;
use tablescene::scene::{
    assemble, collision_metrics, detect_collisions, export_scene, import_layout, resolve_overlaps,
    swap_instance, ModelSpec, Pose, SceneLayout,
};
use tablescene::tsa::{run_tsa, SizePrior, StackingGraph, TsaInput, TsaResult};
use tablescene::Exec;
use tablescene_services::queries::{
    camera_init_request, parse_camera_init, parse_size_prior, parse_stacking, parse_up_axis_hint,
    size_prior_request, stacking_request, up_axis_request,
};
use tablescene_services::{FixtureStore, HttpTransport, Mode, ServiceClient, ServiceRequest};

use crate::bundle::{sha256_file, Bundle};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{
    output_ref, write_file, ManifestInputs, RunManifest, StageRecord, StageStatus, Timing,
};

pub struct RunOptions {
    pub bundle: PathBuf,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
    pub jobs: usize,
    pub mode: Mode,
    pub debug_renders: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricChoice {
    Mse,
    Feature,
}

pub struct Run {
    pub bundle: Bundle,
    pub out: PathBuf,
    pub cfg: RunConfig,
    client: ServiceClient,
    exec: Exec,
    debug_renders: bool,
    manifest: RunManifest,
    timing: Timing,
}

fn canonical_rel(id: &str) -> String {
    format!("canonical/{id}.obj")
}

fn json_text<T: serde::Serialize + ?Sized>(stage: &str, v: &T) -> CliResult<String> {
    to_stable_string(v).map_err(|e| CliError::stage(stage, None, e))
}

fn load_canonical(run_dir: &Path, rel: &str, id: &str) -> CliResult<CanonicalModel> {
    let path = run_dir.join(rel);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let mesh = parse_obj(&text).map_err(|e| CliError::stage("load", Some(id), e))?;
    Ok(CanonicalModel::new(id, &mesh))
}

impl Run {
    pub fn open(opts: &RunOptions) -> CliResult<Self> {
        let cfg = RunConfig::load(opts.config.as_deref())?;
        let bundle = Bundle::load(&opts.bundle)?;
        let store = FixtureStore::open(bundle.fixtures_dir())
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let transport = match opts.mode {
            Mode::Replay => None,
            _ => Some(Box::new(HttpTransport::new(cfg.services.clone()))
                as Box<dyn tablescene_services::Transport>),
        };
        let client = ServiceClient::new(store, opts.mode, transport, cfg.services.max_in_flight);
        std::fs::create_dir_all(&opts.out).map_err(|e| CliError::io(&opts.out, e))?;
        let inputs = ManifestInputs {
            bundle: opts.bundle.to_string_lossy().into_owned(),
            reference: bundle.manifest.reference.clone(),
            fixtures: bundle.manifest.fixtures.clone(),
        };
        let mut manifest = RunManifest::load(&opts.out)?
            .unwrap_or_else(|| RunManifest::new(inputs.clone(), String::new(), cfg.clone()));
        manifest.inputs = inputs;
        manifest.mode = opts.mode.to_string();
        manifest.config = cfg.clone();
        let mut timing = Timing::load_or_default(&opts.out);
        timing.jobs = opts.jobs;
        Ok(Self {
            bundle,
            out: opts.out.clone(),
            cfg,
            client,
            exec: Exec::from_jobs(opts.jobs),
            debug_renders: opts.debug_renders,
            manifest,
            timing,
        })
    }

    fn scene_name(&self) -> &str {
        &self.bundle.manifest.scene
    }

    fn up_axis_requests(&self) -> CliResult<Vec<(String, ServiceRequest)>> {
        self.bundle
            .manifest
            .instances
            .iter()
            .map(|i| {
                let sha = sha256_file(&self.bundle.path(&i.mesh))?;
                Ok((i.id.clone(), up_axis_request(&i.id, &sha)))
            })
            .collect()
    }

    fn camera_request(&self) -> CliResult<ServiceRequest> {
        let sha = sha256_file(&self.bundle.path(&self.bundle.manifest.reference))?;
        Ok(camera_init_request(self.scene_name(), &sha))
    }

    fn prior_requests(&self) -> Vec<(String, ServiceRequest)> {
        self.bundle
            .manifest
            .instances
            .iter()
            .map(|i| (i.id.clone(), size_prior_request(&i.id, &i.label)))
            .collect()
    }

    fn stacking_request(&self) -> ServiceRequest {
        stacking_request(self.scene_name(), &self.bundle.ids())
    }

    /// Every service request the pipeline will make.
    pub fn all_requests(&self) -> CliResult<Vec<ServiceRequest>> {
        let mut out: Vec<ServiceRequest> =
            self.up_axis_requests()?.into_iter().map(|(_, r)| r).collect();
        out.push(self.camera_request()?);
        out.extend(self.prior_requests().into_iter().map(|(_, r)| r));
        out.push(self.stacking_request());
        Ok(out)
    }

    /// Fails with the full list of missing fixtures (replay mode only).
    pub fn preflight(&self) -> CliResult<()> {
        self.client
            .preflight(&self.all_requests()?)
            .map_err(CliError::ReplayMiss)
    }

    fn call_json(&self, stage: &str, instance: Option<&str>, req: &ServiceRequest) -> CliResult<serde_json::Value> {
        self.client
            .call_json(req)
            .map_err(|e| CliError::from_service(stage, instance, e))
    }

    /// Records the stage outcome in the manifest and timing log.
    fn finish(&mut self, stage: &str, result: CliResult<Vec<PathBuf>>) -> CliResult<()> {
        let rec = match &result {
            Ok(paths) => StageRecord {
                status: StageStatus::Ok,
                outputs: paths
                    .iter()
                    .map(|p| output_ref(&self.out, p))
                    .collect::<CliResult<_>>()?,
                failed_instance: None,
                error: None,
            },
            Err(e) => StageRecord {
                status: StageStatus::Failed,
                outputs: Vec::new(),
                failed_instance: match e {
                    CliError::Stage { instance, .. } => instance.clone(),
                    _ => None,
                },
                error: Some(e.to_string()),
            },
        };
        self.manifest.record(stage, rec);
        self.manifest.save(&self.out)?;
        self.timing.save(&self.out)?;
        result.map(|_| ())
    }

    fn write(&self, rel: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.out.join(rel);
        write_file(&path, bytes)?;
        Ok(path)
    }

    pub fn canonicalize(&mut self) -> CliResult<()> {
        let t0 = Instant::now();
        let r = self.canonicalize_inner();
        self.timing.add("canonicalize", "total", t0.elapsed().as_secs_f64());
        self.finish("canonicalize", r)
    }

    fn canonicalize_inner(&mut self) -> CliResult<Vec<PathBuf>> {
        let reqs = self.up_axis_requests()?;
        let mut hints = BTreeMap::new();
        let mut outputs = Vec::new();
        for (id, req) in &reqs {
            let resp = self.call_json("canonicalize", Some(id), req)?;
            let hint = parse_up_axis_hint(id, &resp)
                .map_err(|e| CliError::from_service("canonicalize", Some(id), e))?;
            hints.insert(id.clone(), hint);
        }
        let instances = self.bundle.manifest.instances.clone();
        let bundle = &self.bundle;
        let models = self.exec.map(&instances, |inst| -> CliResult<String> {
            let mesh = load_mesh(bundle.path(&inst.mesh))
                .map_err(|e| CliError::stage("canonicalize", Some(&inst.id), e))?;
            let model = CanonicalModel::from_hinted(&inst.id, &mesh, hints[&inst.id]);
            Ok(write_obj(model.mesh()))
        });
        for (inst, text) in instances.iter().zip(models) {
            outputs.push(self.write(&canonical_rel(&inst.id), text?.as_bytes())?);
        }
        let hint_text: BTreeMap<&String, String> =
            hints.iter().map(|(k, v)| (k, v.to_string())).collect();
        outputs.push(self.write("canonical/hints.json", json_text("canonicalize", &hint_text)?.as_bytes())?);
        Ok(outputs)
    }

    fn dro_camera(&self) -> CliResult<Camera> {
        let resp = self.call_json("dro", None, &self.camera_request()?)?;
        let init = parse_camera_init(&resp).map_err(|e| CliError::from_service("dro", None, e))?;
        Ok(init.camera())
    }

    /// Rotation for every object, or just `only`.
    pub fn dro(&mut self, only: Option<&str>) -> CliResult<()> {
        let t0 = Instant::now();
        let r = self.dro_inner(only);
        self.timing.add("dro", "total", t0.elapsed().as_secs_f64());
        self.finish("dro", r)
    }

    fn dro_inner(&mut self, only: Option<&str>) -> CliResult<Vec<PathBuf>> {
        if let Some(id) = only {
            self.bundle.instance(id)?;
            if id == self.bundle.table_id() {
                return Err(CliError::Validation(format!("'{id}' is the table; it has no rotation stage")));
            }
        }
        let camera = self.dro_camera()?;
        let targets: Vec<_> = self
            .bundle
            .objects()
            .filter(|i| only.is_none_or(|o| o == i.id))
            .cloned()
            .collect();
        let extractor: Arc<dyn FeatureExtractor> = Arc::new(PatchMeanExtractor);
        let (out, bundle, cfg, debug) = (&self.out, &self.bundle, &self.cfg, self.debug_renders);
        let results = self.exec.map(&targets, |inst| {
            let t = Instant::now();
            let id = inst.id.as_str();
            let fail = |e: tablescene::Error| CliError::stage("dro", Some(id), e);
            let crop = RgbImage::load(bundle.path(inst.crop.as_deref().unwrap_or_default())).map_err(fail)?;
            let mask = GrayImage::load(bundle.path(inst.mask.as_deref().unwrap_or_default()))
                .map_err(fail)?
                .map(|v| if v > 0.5 { 1.0 } else { 0.0 });
            let target = TargetViews::prepare(crop, mask, &cfg.canny, extractor.clone()).map_err(fail)?;
            let model = load_canonical(out, &canonical_rel(id), id)?;
            let result = estimate_rotation(model.mesh(), &target, &camera, &cfg.dro).map_err(fail)?;
            let debug = if debug {
                Some(debug_triptych(model.mesh(), &target, &camera, result.yaw_deg, &cfg.dro).map_err(fail)?)
            } else {
                None
            };
            Ok((result, debug, t.elapsed().as_secs_f64()))
        });
        let mut outputs = Vec::new();
        let mut first_err = None;
        // successes are written even when another instance failed
        for (inst, r) in targets.iter().zip(results) {
            match r {
                Ok((result, debug, secs)) => {
                    self.timing.add("dro", &inst.id, secs);
                    let text = json_text("dro", &result)?;
                    outputs.push(self.write(&format!("dro/{}.json", inst.id), text.as_bytes())?);
                    if let Some(img) = debug {
                        let path = self.out.join(format!("debug/dro_{}.png", inst.id));
                        write_file(&path, &img.to_png_bytes().map_err(|e| CliError::stage("dro", Some(&inst.id), e))?)?;
                    }
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        match first_err {
            Some(e) => Err(e),
            None => Ok(outputs),
        }
    }

    fn read_text(&self, rel: &str) -> CliResult<String> {
        let path = self.out.join(rel);
        std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))
    }

    pub fn tsa(&mut self) -> CliResult<()> {
        let t0 = Instant::now();
        let r = self.tsa_inner();
        self.timing.add("tsa", "total", t0.elapsed().as_secs_f64());
        self.finish("tsa", r)
    }

    fn tsa_inner(&mut self) -> CliResult<Vec<PathBuf>> {
        let mut yaws = BTreeMap::new();
        for inst in self.bundle.objects() {
            let text = self.read_text(&format!("dro/{}.json", inst.id))?;
            let r: RotationResult = serde_json::from_str(&text)
                .map_err(|e| CliError::stage("tsa", Some(&inst.id), e))?;
            yaws.insert(inst.id.clone(), r.yaw_deg);
        }
        let mut priors: Vec<SizePrior> = Vec::new();
        for (id, req) in self.prior_requests() {
            let resp = self.call_json("tsa", Some(&id), &req)?;
            priors.push(parse_size_prior(&id, &resp).map_err(|e| CliError::from_service("tsa", Some(&id), e))?);
        }
        let resp = self.call_json("tsa", None, &self.stacking_request())?;
        let stacking = parse_stacking(&resp, &self.bundle.ids(), self.bundle.table_id())
            .map_err(|e| CliError::from_service("tsa", None, e))?;
        let input = TsaInput {
            table_id: self.bundle.table_id().to_string(),
            boxes: self.bundle.boxes()?,
            priors,
            yaws,
            stacking,
        };
        let result = run_tsa(&input, &self.cfg.tsa).map_err(|e| CliError::stage("tsa", None, e))?;
        let report = result.to_report_json().map_err(|e| CliError::stage("tsa", None, e))?;
        Ok(vec![
            self.write("tsa/input.json", json_text("tsa", &input)?.as_bytes())?,
            self.write("tsa/result.json", json_text("tsa", &result)?.as_bytes())?,
            self.write("tsa/report_cm.json", report.as_bytes())?,
        ])
    }

    pub fn assemble(&mut self) -> CliResult<()> {
        let t0 = Instant::now();
        let r = self.assemble_inner();
        self.timing.add("assemble", "total", t0.elapsed().as_secs_f64());
        self.finish("assemble", r)
    }

    fn assemble_inner(&mut self) -> CliResult<Vec<PathBuf>> {
        let fail = |e: tablescene::Error| CliError::stage("assemble", None, e);
        let result: TsaResult = serde_json::from_str(&self.read_text("tsa/result.json")?)
            .map_err(|e| CliError::stage("assemble", None, e))?;
        let input: TsaInput = serde_json::from_str(&self.read_text("tsa/input.json")?)
            .map_err(|e| CliError::stage("assemble", None, e))?;
        let stacking: &StackingGraph = &input.stacking;
        let mut specs = Vec::new();
        let mut poses = Vec::new();
        for inst in &self.bundle.manifest.instances {
            let rel = canonical_rel(&inst.id);
            let model = load_canonical(&self.out, &rel, &inst.id)?;
            specs.push(ModelSpec::new(&inst.id, &inst.label, rel, model));
            let placement = result
                .placement(&inst.id)
                .ok_or_else(|| CliError::stage("assemble", Some(&inst.id), "no placement"))?;
            poses.push(Pose::from_placement(placement, stacking).map_err(fail)?);
        }
        let mut scene = assemble(self.bundle.table_id(), &specs, &poses).map_err(fail)?;
        let mut resolve_note = json!(null);
        if self.cfg.assemble.resolve_overlaps {
            let r = resolve_overlaps(&scene, self.cfg.assemble.max_resolve_iters, self.exec);
            resolve_note = json!({ "converged": r.converged, "moved": r.displacements.keys().collect::<Vec<_>>() });
            scene = r.scene;
        }
        let mut outputs = self.write_scene("scene", &scene, "assemble")?;
        let report = detect_collisions(&scene, self.exec);
        let metrics = collision_metrics(std::slice::from_ref(&report)).map_err(fail)?;
        let doc = json!({ "report": report, "metrics": metrics, "resolve": resolve_note });
        outputs.push(self.write("scene/collisions.json", json_text("assemble", &doc)?.as_bytes())?);
        Ok(outputs)
    }

    fn write_scene(&self, dir: &str, scene: &SceneLayout, stage: &str) -> CliResult<Vec<PathBuf>> {
        let paths = export_scene(scene, &self.out.join(dir)).map_err(|e| CliError::stage(stage, None, e))?;
        Ok(vec![paths.layout, paths.glb])
    }

    pub fn evaluate(&mut self, sweep: bool, metric: MetricChoice) -> CliResult<()> {
        let t0 = Instant::now();
        let r = self.evaluate_inner(sweep, metric);
        self.timing.add("evaluate", "total", t0.elapsed().as_secs_f64());
        self.finish("evaluate", r)
    }

    fn evaluate_inner(&mut self, sweep: bool, metric: MetricChoice) -> CliResult<Vec<PathBuf>> {
        let fail = |e: tablescene::Error| CliError::stage("evaluate", None, e);
        let scene = load_scene(&self.out, "scene/layout.json")?;
        let report = detect_collisions(&scene, self.exec);
        let metrics = collision_metrics(std::slice::from_ref(&report)).map_err(fail)?;
        let mut outputs = vec![self.write(
            "eval/collisions.json",
            json_text("evaluate", &json!({ "report": report, "metrics": metrics }))?.as_bytes(),
        )?];
        if !sweep {
            return Ok(outputs);
        }
        let reference = RgbImage::load(self.bundle.path(&self.bundle.manifest.reference)).map_err(fail)?;
        let size = self.cfg.sweep.image_size;
        if reference.dims() != (size, size) {
            return Err(CliError::Validation(format!(
                "reference is {:?}, sweep renders {size}x{size}",
                reference.dims()
            )));
        }
        let views = camera_sweep(&scene, &self.cfg.sweep, self.exec).map_err(fail)?;
        let metric: Box<dyn ImageMetric> = match metric {
            MetricChoice::Mse => Box::new(MseMetric),
            MetricChoice::Feature => Box::new(FeatureDistanceMetric::new(Arc::new(PatchMeanExtractor))),
        };
        let best = best_view(&views, &reference, metric.as_ref(), self.exec).map_err(fail)?;
        let report = SweepReport::new(&self.cfg.sweep, &best);
        outputs.push(self.write("eval/sweep.json", report.to_json().map_err(fail)?.as_bytes())?);
        outputs.push(self.write("eval/best_view.png", &best.image.to_png_bytes().map_err(fail)?)?);
        let columns = self.cfg.sweep.distances().len();
        let sheet = contact_sheet(&views, columns, 64);
        outputs.push(self.write("eval/contact_sheet.png", &sheet.to_png_bytes().map_err(fail)?)?);
        Ok(outputs)
    }

    /// canonicalize → dro → tsa → assemble (→ evaluate).
    pub fn pipeline(&mut self, evaluate: bool, metric: MetricChoice) -> CliResult<()> {
        self.preflight()?;
        self.canonicalize()?;
        self.dro(None)?;
        self.tsa()?;
        self.assemble()?;
        if evaluate {
            self.evaluate(true, metric)?;
        }
        Ok(())
    }
}

/// Scene from an exported layout; mesh references resolve against `run_dir`.
pub fn load_scene(run_dir: &Path, layout_rel: &str) -> CliResult<SceneLayout> {
    let path = run_dir.join(layout_rel);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    import_layout(&text, |inst| {
        let mesh_path = run_dir.join(&inst.mesh);
        let mesh_text = std::fs::read_to_string(&mesh_path)
            .map_err(|e| tablescene::Error::Parse { context: mesh_path.display().to_string(), reason: e.to_string() })?;
        Ok(CanonicalModel::new(&inst.id, &parse_obj(&mesh_text)?))
    })
    .map_err(|e| CliError::stage("load", None, e))
}

pub struct SwapOptions {
    pub out: PathBuf,
    pub instance: String,
    pub mesh: PathBuf,
    pub label: Option<String>,
    pub up_axis: Option<UpAxisHint>,
    pub refit: bool,
}

/// Replaces one instance's model in the assembled scene and writes the
/// edited scene to `swap/`.
pub fn swap(opts: &SwapOptions) -> CliResult<()> {
    let mut manifest = RunManifest::load(&opts.out)?.ok_or_else(|| {
        CliError::Validation(format!("{} has no manifest; run the pipeline first", opts.out.display()))
    })?;
    let result = (|| -> CliResult<Vec<PathBuf>> {
        let fail = |e: tablescene::Error| CliError::stage("swap", Some(&opts.instance), e);
        let scene = load_scene(&opts.out, "scene/layout.json")?;
        let old = scene
            .instance(&opts.instance)
            .ok_or_else(|| CliError::Validation(format!("unknown instance '{}'", opts.instance)))?;
        let raw: TriangleMesh = load_mesh(&opts.mesh).map_err(fail)?;
        let model = CanonicalModel::from_hinted(&opts.instance, &raw, opts.up_axis.unwrap_or(UpAxisHint::IDENTITY));
        let rel = format!("canonical/swap_{}.obj", opts.instance);
        let mesh_path = opts.out.join(&rel);
        write_file(&mesh_path, write_obj(model.mesh()).as_bytes())?;
        let label = opts.label.clone().unwrap_or_else(|| old.label.clone());
        let edited = swap_instance(&scene, &opts.instance, &label, &rel, Arc::new(model), opts.refit).map_err(fail)?;
        let paths = export_scene(&edited, &opts.out.join("swap")).map_err(fail)?;
        let report = detect_collisions(&edited, Exec::Sequential);
        let coll = opts.out.join("swap/collisions.json");
        write_file(&coll, json_text("swap", &json!({ "report": report }))?.as_bytes())?;
        Ok(vec![mesh_path, paths.layout, paths.glb, coll])
    })();
    let rec = match &result {
        Ok(paths) => StageRecord {
            status: StageStatus::Ok,
            outputs: paths.iter().map(|p| output_ref(&opts.out, p)).collect::<CliResult<_>>()?,
            failed_instance: None,
            error: None,
        },
        Err(e) => StageRecord {
            status: StageStatus::Failed,
            outputs: Vec::new(),
            failed_instance: Some(opts.instance.clone()),
            error: Some(e.to_string()),
        },
    };
    manifest.record("swap", rec);
    manifest.save(&opts.out)?;
    result.map(|_| ())
}
