//! Generator for the bundled demo scene: a table with nine objects, one of
//! them stacked, plus hand-authored service fixtures. The ground truth is
//! exposed so tests can compare recovered layouts against it.

use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use serde_json::{json, Value};
use tablescene::evalharness::{camera_sweep, SweepConfig};
use tablescene::geometry::{
    footprint_dims, write_obj, CanonicalModel, RigidScaleTransform, TriangleMesh, UpAxisHint,
};
use tablescene::image::{GrayImage, RgbImage};
use tablescene::jsonfmt::to_stable_string;
use tablescene::raster::{render_with, Camera, Framing, RenderOptions, DEFAULT_SOFTNESS};
use tablescene::scene::{assemble, ModelSpec, Pose, SceneLayout};
use tablescene::tsa::TopViewBox;
use tablescene::Exec;
use tablescene_services::queries::{
    camera_init_request, size_prior_request, stacking_request, up_axis_request,
};
use tablescene_services::{FixtureStore, ServiceRequest};

use crate::bundle::{sha256_file, BundleInstance, BundleManifest, BUNDLE_SCHEMA};
use crate::error::{CliError, CliResult};
use crate::manifest::write_file;

pub const SCENE_NAME: &str = "demo_tabletop";
pub const TABLE_ID: &str = "table_1";
/// Meters per top-view pixel.
pub const TOPVIEW_ALPHA: f64 = 0.002;
pub const TOPVIEW_SIZE: (u32, u32) = (800, 600);
/// View the reference image is rendered from; it lies on the default sweep grid.
pub const REFERENCE_VIEW: (f64, f64) = (40.0, 2.2);
pub const CAMERA_INIT: (f64, f64) = (0.0, 30.0);
const RECORDED_AT: &str = "hand-authored";

/// Cuboid part in centimeters: min, max, color.
type Part = ([f64; 3], [f64; 3], [f64; 3]);

pub struct DemoObject {
    pub id: &'static str,
    pub label: &'static str,
    parts: Vec<Part>,
    /// Stored orientation of the raw mesh file.
    pub stored_as: UpAxisHint,
    /// Centimeters on the tabletop.
    pub position_cm: (f64, f64),
    pub yaw_deg: f64,
    pub rests_on: Option<&'static str>,
    /// Multiplier applied to the size prior fixture (1 = correct prior).
    pub prior_error: f64,
}

impl DemoObject {
    /// Canonical mesh in meters, pivot at the bottom center.
    pub fn mesh(&self) -> TriangleMesh {
        let cm = |v: [f64; 3]| Point3::new(v[0] / 100.0, v[1] / 100.0, v[2] / 100.0);
        let parts: Vec<TriangleMesh> = self
            .parts
            .iter()
            .map(|(lo, hi, c)| TriangleMesh::cuboid(cm(*lo), cm(*hi)).with_uniform_color(*c))
            .collect();
        let refs: Vec<&TriangleMesh> = parts.iter().collect();
        CanonicalModel::new(self.id, &TriangleMesh::merge(&refs)).mesh().clone()
    }

    /// True width, depth, height in meters.
    pub fn size_m(&self) -> Vector3<f64> {
        self.mesh().aabb().extents()
    }

    /// The mesh as stored in the bundle: unit-normalized and expressed in
    /// the `stored_as` frame, like an image-to-3D output.
    pub fn raw_mesh(&self) -> TriangleMesh {
        let mesh = self.mesh();
        let s = 1.0 / mesh.aabb().extents().max();
        let back = self.stored_as.rotation().transpose();
        mesh.map_vertices(|p| Point3::from(back * (p.coords * s)))
    }

    pub fn is_table(&self) -> bool {
        self.id == TABLE_ID
    }
}

const BROWN: [f64; 3] = [0.55, 0.36, 0.2];
const DARK: [f64; 3] = [0.12, 0.12, 0.14];

fn y_up() -> UpAxisHint {
    "+Y up, -Z front".parse().expect("valid hint")
}

fn z_up() -> UpAxisHint {
    UpAxisHint::IDENTITY
}

#[rustfmt::skip]
pub fn demo_objects() -> Vec<DemoObject> {
    let leg = |x: f64, y: f64| ([x - 2.5, y - 2.5, 0.0], [x + 2.5, y + 2.5, 72.0], BROWN);
    let obj = |id, label, parts, stored_as, position_cm, yaw_deg| DemoObject {
        id, label, parts, stored_as, position_cm, yaw_deg, rests_on: None, prior_error: 1.0,
    };
    let mut out = vec![
        obj(TABLE_ID, "table", vec![
            ([-60.0, -40.0, 72.0], [60.0, 40.0, 75.0], BROWN),
            leg(-55.0, -35.0), leg(55.0, -35.0), leg(-55.0, 35.0), leg(55.0, 35.0),
        ], z_up(), (0.0, 0.0), 0.0),
        obj("book_1", "book", vec![
            ([-12.0, -8.5, 0.0], [12.0, 8.5, 3.5], [0.7, 0.12, 0.12]),
            ([5.0, 8.5, 0.0], [7.0, 12.0, 0.6], [0.95, 0.8, 0.1]),
        ], z_up(), (-38.0, 18.0), 15.0),
        obj("phone_1", "phone", vec![
            ([-7.5, -3.75, 0.0], [7.5, 3.75, 1.2], DARK),
            ([-7.0, -3.25, 1.2], [7.0, 3.25, 1.4], [0.15, 0.3, 0.75]),
            ([3.5, 0.5, 1.4], [6.5, 3.0, 2.4], [0.6, 0.6, 0.62]),
        ], z_up(), (-38.0, 17.0), 40.0),
        obj("mug_1", "mug", vec![
            ([-4.5, -4.5, 0.0], [4.5, 4.5, 10.0], [0.92, 0.92, 0.88]),
            ([4.5, -1.0, 2.0], [7.5, 1.0, 8.0], [0.2, 0.35, 0.8]),
        ], z_up(), (-8.0, 26.0), 120.0),
        obj("toy_car_1", "toy car", vec![
            ([-8.0, -4.0, 1.0], [8.0, 4.0, 4.0], [0.85, 0.15, 0.1]),
            ([-4.0, -3.5, 4.0], [3.0, 3.5, 6.5], [0.55, 0.8, 0.95]),
            ([-8.0, -3.0, 4.0], [-7.0, 3.0, 5.0], DARK),
            ([-6.5, -4.2, 0.0], [-4.0, -3.2, 2.5], DARK),
            ([-6.5, 3.2, 0.0], [-4.0, 4.2, 2.5], DARK),
            ([4.0, -4.2, 0.0], [6.5, -3.2, 2.5], DARK),
            ([4.0, 3.2, 0.0], [6.5, 4.2, 2.5], DARK),
        ], z_up(), (20.0, 26.0), -30.0),
        obj("lamp_1", "desk lamp", vec![
            ([-7.0, -7.0, 0.0], [7.0, 7.0, 2.0], [0.4, 0.4, 0.42]),
            ([-1.0, -1.0, 2.0], [1.0, 1.0, 30.0], [0.75, 0.75, 0.78]),
            ([1.0, -1.0, 28.0], [10.0, 1.0, 30.0], [0.75, 0.75, 0.78]),
            ([6.0, -4.0, 22.0], [14.0, 4.0, 28.0], [0.95, 0.85, 0.2]),
        ], y_up(), (46.0, 22.0), 200.0),
        obj("bottle_1", "water bottle", vec![
            ([-3.5, -3.5, 0.0], [3.5, 3.5, 18.0], [0.2, 0.6, 0.35]),
            ([-1.5, -1.5, 18.0], [1.5, 1.5, 24.0], [0.2, 0.6, 0.35]),
            ([-3.5, -4.0, 6.0], [1.0, -3.5, 12.0], [0.95, 0.95, 0.95]),
        ], y_up(), (2.0, 2.0), 10.0),
        obj("plant_1", "potted plant", vec![
            ([-6.0, -6.0, 0.0], [6.0, 6.0, 10.0], [0.75, 0.4, 0.25]),
            ([-8.0, -3.0, 10.0], [3.0, 7.0, 24.0], [0.2, 0.55, 0.2]),
            ([0.0, -7.0, 12.0], [7.0, 0.0, 20.0], [0.1, 0.35, 0.12]),
        ], y_up(), (-40.0, -22.0), 35.0),
        obj("remote_1", "tv remote", vec![
            ([-9.0, -2.5, 0.0], [9.0, 2.5, 2.0], [0.25, 0.25, 0.28]),
            ([3.0, -1.5, 2.0], [7.0, 1.5, 2.6], [0.85, 0.1, 0.1]),
        ], z_up(), (-10.0, -20.0), 75.0),
        obj("tissue_box_1", "tissue box", vec![
            ([-12.0, -6.0, 0.0], [12.0, 6.0, 9.0], [0.1, 0.55, 0.6]),
            ([-3.0, -2.0, 9.0], [1.0, 2.0, 13.0], [0.98, 0.98, 0.98]),
        ], z_up(), (28.0, -20.0), -15.0),
    ];
    for o in &mut out {
        match o.id {
            "phone_1" => o.rests_on = Some("book_1"),
            // twice too large; alignment must rescale it to its box
            "toy_car_1" => o.prior_error = 2.0,
            _ => {}
        }
    }
    out
}

/// Ground-truth scene assembled from the canonical meshes.
pub fn ground_truth_scene() -> CliResult<SceneLayout> {
    let objects = demo_objects();
    let fail = |e: tablescene::Error| CliError::stage("demo", None, e);
    let table_h = objects.iter().find(|o| o.is_table()).expect("table").size_m().z;
    let mut specs = Vec::new();
    let mut poses = Vec::new();
    for o in &objects {
        let size = o.size_m();
        let z = match o.rests_on {
            _ if o.is_table() => 0.0,
            None => table_h,
            Some(s) => table_h + objects.iter().find(|p| p.id == s).expect("support").size_m().z,
        };
        let t = Vector3::new(o.position_cm.0 / 100.0, o.position_cm.1 / 100.0, z);
        let xf = RigidScaleTransform::new(o.yaw_deg, t, size).map_err(fail)?;
        let mut pose = Pose::new(o.id, xf);
        pose.supports = o.rests_on.iter().map(|s| s.to_string()).collect();
        poses.push(pose);
        specs.push(ModelSpec::new(o.id, o.label, format!("meshes/{}.obj", o.id), CanonicalModel::new(o.id, &o.mesh())));
    }
    assemble(TABLE_ID, &specs, &poses).map_err(fail)
}

/// Ideal top-view boxes: yawed footprints at `TOPVIEW_ALPHA`, table centered.
pub fn topview_boxes() -> Vec<TopViewBox> {
    let (iw, ih) = TOPVIEW_SIZE;
    let (tu, tv) = (iw as f64 / 2.0, ih as f64 / 2.0);
    demo_objects()
        .iter()
        .map(|o| {
            let s = o.size_m();
            let (fw, fd) = footprint_dims(s.x, s.y, o.yaw_deg);
            let (w, h) = (fw / TOPVIEW_ALPHA, fd / TOPVIEW_ALPHA);
            // inverse of the alignment's image-to-table mapping
            let cu = tu - o.position_cm.0 / 100.0 / TOPVIEW_ALPHA;
            let cv = tv + o.position_cm.1 / 100.0 / TOPVIEW_ALPHA;
            TopViewBox {
                id: o.id.to_string(),
                x_min: cu - w / 2.0,
                y_min: cv - h / 2.0,
                w_img: w,
                h_img: h,
                image_width: iw,
                image_height: ih,
            }
        })
        .collect()
}

fn topview_image(boxes: &[TopViewBox], objects: &[DemoObject]) -> RgbImage {
    let (iw, ih) = TOPVIEW_SIZE;
    let mut img = RgbImage::filled(iw as usize, ih as usize, [1.0; 3]);
    for (b, o) in boxes.iter().zip(objects) {
        let color = o.parts[0].2;
        let x0 = b.x_min.round().max(0.0) as usize;
        let y0 = b.y_min.round().max(0.0) as usize;
        let x1 = ((b.x_min + b.w_img).round() as usize).min(iw as usize);
        let y1 = ((b.y_min + b.h_img).round() as usize).min(ih as usize);
        for y in y0..y1 {
            for x in x0..x1 {
                img.set(x, y, color);
            }
        }
    }
    img
}

fn crop_and_mask(o: &DemoObject) -> CliResult<(RgbImage, GrayImage)> {
    let camera = Camera::new(CAMERA_INIT.0, CAMERA_INIT.1, Camera::default().distance);
    let opts = RenderOptions {
        softness: DEFAULT_SOFTNESS,
        background: [0.0; 3],
        framing: Framing::TightSquare,
    };
    let r = render_with(&o.mesh(), &camera, o.yaw_deg, &opts)
        .map_err(|e| CliError::stage("demo", Some(o.id), e))?;
    let mask = r.coverage_mask();
    Ok((r.color, mask))
}

/// Reference photo stand-in: the ground-truth scene from `REFERENCE_VIEW`.
pub fn reference_image(scene: &SceneLayout) -> CliResult<RgbImage> {
    let cfg = SweepConfig {
        elevation_start_deg: REFERENCE_VIEW.0,
        elevation_stop_deg: REFERENCE_VIEW.0,
        distance_min: REFERENCE_VIEW.1,
        distance_max: REFERENCE_VIEW.1,
        distance_count: 1,
        ..SweepConfig::default()
    };
    let mut views = camera_sweep(scene, &cfg, Exec::Sequential).map_err(|e| CliError::stage("demo", None, e))?;
    Ok(views.remove(0).image)
}

fn record(store: &FixtureStore, req: &ServiceRequest, body: &Value) -> CliResult<()> {
    let text = to_stable_string(body).map_err(|e| CliError::stage("demo", None, e))?;
    store
        .record(req.kind(), req.digest(), req.kind().response_media_type(), text.into_bytes(), RECORDED_AT)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(())
}

fn axis_fixture(h: UpAxisHint) -> Value {
    json!({ "up": h.up().to_string(), "front": h.front().to_string() })
}

/// Writes the complete bundle into `dir` and returns the manifest path.
pub fn write_demo_bundle(dir: &Path) -> CliResult<PathBuf> {
    let objects = demo_objects();
    let png = |img: &RgbImage| img.to_png_bytes().map_err(|e| CliError::stage("demo", None, e));
    let mut instances = Vec::new();
    for o in &objects {
        let mesh_rel = format!("meshes/{}.obj", o.id);
        write_file(&dir.join(&mesh_rel), write_obj(&o.raw_mesh()).as_bytes())?;
        let mut inst = BundleInstance {
            id: o.id.to_string(),
            label: o.label.to_string(),
            mesh: mesh_rel,
            crop: None,
            mask: None,
        };
        if !o.is_table() {
            let (crop, mask) = crop_and_mask(o)?;
            let (c, m) = (format!("crops/{}.png", o.id), format!("masks/{}.png", o.id));
            write_file(&dir.join(&c), &png(&crop)?)?;
            write_file(&dir.join(&m), &png(&RgbImage::from_gray(&mask))?)?;
            inst.crop = Some(c);
            inst.mask = Some(m);
        }
        instances.push(inst);
    }

    let boxes = topview_boxes();
    let json_err = |e: tablescene::Error| CliError::stage("demo", None, e);
    write_file(&dir.join("topview_boxes.json"), to_stable_string(&boxes).map_err(json_err)?.as_bytes())?;
    write_file(&dir.join("topview.png"), &png(&topview_image(&boxes, &objects))?)?;
    let scene = ground_truth_scene()?;
    write_file(&dir.join("reference.png"), &png(&reference_image(&scene)?)?)?;

    let store = FixtureStore::open(dir.join("fixtures")).map_err(|e| CliError::Validation(e.to_string()))?;
    for o in &objects {
        let sha = sha256_file(&dir.join(format!("meshes/{}.obj", o.id)))?;
        record(&store, &up_axis_request(o.id, &sha), &axis_fixture(o.stored_as))?;
        let s = o.size_m() * 100.0 * o.prior_error;
        let mut prior = json!({ "size_cm": [s.x, s.y, s.z] });
        if o.prior_error != 1.0 {
            prior["confidence"] = json!("low");
        }
        record(&store, &size_prior_request(o.id, o.label), &prior)?;
    }
    let ref_sha = sha256_file(&dir.join("reference.png"))?;
    record(
        &store,
        &camera_init_request(SCENE_NAME, &ref_sha),
        &json!({ "azimuth_deg": CAMERA_INIT.0, "elevation_deg": CAMERA_INIT.1 }),
    )?;
    let ids: Vec<String> = objects.iter().map(|o| o.id.to_string()).collect();
    let stacking: Vec<Value> = objects
        .iter()
        .filter_map(|o| o.rests_on.map(|s| json!({ "top": o.id, "bottom": s })))
        .collect();
    record(&store, &stacking_request(SCENE_NAME, &ids), &json!({ "stacking": stacking }))?;

    let manifest = BundleManifest {
        schema: BUNDLE_SCHEMA.to_string(),
        scene: SCENE_NAME.to_string(),
        table_id: TABLE_ID.to_string(),
        reference: "reference.png".into(),
        topview: "topview.png".into(),
        boxes: "topview_boxes.json".into(),
        fixtures: "fixtures".into(),
        instances,
    };
    let path = dir.join("scene.json");
    write_file(&path, to_stable_string(&manifest).map_err(json_err)?.as_bytes())?;
    Ok(path)
}
