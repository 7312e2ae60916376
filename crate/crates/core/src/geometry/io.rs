//! Mesh loading and saving.
//!
//! Two formats are supported:
//! * Wavefront-style text (`v x y z [r g b]`, `f a b c ...`); polygons are
//!   fan-triangulated on load.
//! * Binary glTF 2.0 (`.glb`). glTF is +Y up, so positions are converted
//!   from/to the engine's +Z-up frame on the way in and out.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix4, Point3, Quaternion, UnitQuaternion, Vector3};
use serde_json::{json, Value};

use super::mesh::{TriangleMesh, DEFAULT_ALBEDO};
use crate::error::{Error, Result};

const GLB_MAGIC: u32 = 0x4654_6C67;
const CHUNK_JSON: u32 = 0x4E4F_534A;
const CHUNK_BIN: u32 = 0x004E_4942;

/// Loads a mesh, picking the format by extension (`.glb` or text otherwise).
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if is_glb_path(path) {
        let named = parse_glb(&bytes)?;
        let meshes: Vec<&TriangleMesh> = named.iter().map(|(_, m)| m).collect();
        if meshes.is_empty() {
            return Err(Error::parse(path.display().to_string(), "no meshes in file"));
        }
        Ok(TriangleMesh::merge(&meshes))
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        parse_obj(&text)
    }
}

pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = if is_glb_path(path) {
        write_glb(&[("mesh", mesh)])?
    } else {
        write_obj(mesh).into_bytes()
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn is_glb_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("glb"))
}

pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut colors = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        let ctx = || format!("obj line {}", lineno + 1);
        match parts.next() {
            Some("v") => {
                let nums: Vec<f64> = parts
                    .map(|p| p.parse::<f64>().map_err(|e| Error::parse(ctx(), e.to_string())))
                    .collect::<Result<_>>()?;
                match nums.len() {
                    3 | 4 => colors.push(DEFAULT_ALBEDO),
                    6 | 7 => colors.push([nums[3], nums[4], nums[5]]),
                    n => return Err(Error::parse(ctx(), format!("vertex with {n} values"))),
                }
                vertices.push(Point3::new(nums[0], nums[1], nums[2]));
            }
            Some("f") => {
                let idx: Vec<u32> = parts
                    .map(|p| resolve_obj_index(p, vertices.len()).ok_or_else(|| {
                        Error::parse(ctx(), format!("bad face index '{p}'"))
                    }))
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::parse(ctx(), "face with fewer than 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::with_colors(vertices, triangles, colors)
}

fn resolve_obj_index(token: &str, n_vertices: usize) -> Option<u32> {
    let first = token.split('/').next()?;
    let i: i64 = first.parse().ok()?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        n_vertices as i64 + i
    } else {
        return None;
    };
    (0..n_vertices as i64).contains(&resolved).then_some(resolved as u32)
}

/// Text mesh with per-vertex colors; floats use 9 decimals so output is stable.
pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    for (v, c) in mesh.vertices().iter().zip(mesh.colors()) {
        let _ = writeln!(
            out,
            "v {:.9} {:.9} {:.9} {:.6} {:.6} {:.6}",
            v.x, v.y, v.z, c[0], c[1], c[2]
        );
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

fn to_gltf_frame(p: &Point3<f64>) -> [f32; 3] {
    [p.x as f32, p.z as f32, -p.y as f32]
}

fn from_gltf_frame(p: [f64; 3]) -> Point3<f64> {
    Point3::new(p[0], -p[2], p[1])
}

/// Writes one glTF node + mesh per entry into a single binary container.
pub fn write_glb(meshes: &[(&str, &TriangleMesh)]) -> Result<Vec<u8>> {
    let mut bin: Vec<u8> = Vec::new();
    let mut views = Vec::new();
    let mut accessors = Vec::new();
    let mut gltf_meshes = Vec::new();
    let mut nodes = Vec::new();

    let mut push_view = |bin: &mut Vec<u8>, data: &[u8], target: u32| -> usize {
        while !bin.len().is_multiple_of(4) {
            bin.push(0);
        }
        let offset = bin.len();
        bin.extend_from_slice(data);
        views.push(json!({
            "buffer": 0, "byteOffset": offset, "byteLength": data.len(), "target": target
        }));
        views.len() - 1
    };

    for (i, (name, mesh)) in meshes.iter().enumerate() {
        let positions: Vec<[f32; 3]> = mesh.vertices().iter().map(to_gltf_frame).collect();
        let mut min = [f32::INFINITY; 3];
        let mut max = [f32::NEG_INFINITY; 3];
        let mut pos_bytes = Vec::with_capacity(positions.len() * 12);
        for p in &positions {
            for k in 0..3 {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
                pos_bytes.extend_from_slice(&p[k].to_le_bytes());
            }
        }
        let mut col_bytes = Vec::with_capacity(positions.len() * 12);
        for c in mesh.colors() {
            for v in c {
                col_bytes.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
        let mut idx_bytes = Vec::with_capacity(mesh.triangles().len() * 12);
        for t in mesh.triangles() {
            for v in t {
                idx_bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        let pv = push_view(&mut bin, &pos_bytes, 34962);
        let cv = push_view(&mut bin, &col_bytes, 34962);
        let iv = push_view(&mut bin, &idx_bytes, 34963);
        let base = accessors.len();
        accessors.push(json!({
            "bufferView": pv, "componentType": 5126, "count": positions.len(),
            "type": "VEC3", "min": min, "max": max
        }));
        accessors.push(json!({
            "bufferView": cv, "componentType": 5126, "count": positions.len(), "type": "VEC3"
        }));
        accessors.push(json!({
            "bufferView": iv, "componentType": 5125,
            "count": mesh.triangles().len() * 3, "type": "SCALAR"
        }));
        gltf_meshes.push(json!({
            "name": name,
            "primitives": [{
                "attributes": { "POSITION": base, "COLOR_0": base + 1 },
                "indices": base + 2,
                "mode": 4
            }]
        }));
        nodes.push(json!({ "name": name, "mesh": i }));
    }
    while !bin.len().is_multiple_of(4) {
        bin.push(0);
    }
    let doc = json!({
        "asset": { "version": "2.0", "generator": "tablescene" },
        "scene": 0,
        "scenes": [{ "nodes": (0..nodes.len()).collect::<Vec<_>>() }],
        "nodes": nodes,
        "meshes": gltf_meshes,
        "accessors": accessors,
        "bufferViews": views,
        "buffers": [{ "byteLength": bin.len() }],
    });
    let mut json_bytes = serde_json::to_vec(&doc)?;
    while json_bytes.len() % 4 != 0 {
        json_bytes.push(b' ');
    }
    let total = 12 + 8 + json_bytes.len() + 8 + bin.len();
    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(&GLB_MAGIC.to_le_bytes());
    out.extend_from_slice(&2u32.to_le_bytes());
    out.extend_from_slice(&(total as u32).to_le_bytes());
    out.extend_from_slice(&(json_bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(&CHUNK_JSON.to_le_bytes());
    out.extend_from_slice(&json_bytes);
    out.extend_from_slice(&(bin.len() as u32).to_le_bytes());
    out.extend_from_slice(&CHUNK_BIN.to_le_bytes());
    out.extend_from_slice(&bin);
    Ok(out)
}

/// Reads every mesh instance reachable from the default scene, with node
/// transforms applied. Returns `(node name, mesh)` pairs in traversal order.
pub fn parse_glb(bytes: &[u8]) -> Result<Vec<(String, TriangleMesh)>> {
    let err = |m: &str| Error::parse("glb", m.to_string());
    let u32_at = |o: usize| -> Result<u32> {
        bytes
            .get(o..o + 4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
            .ok_or_else(|| err("truncated"))
    };
    if u32_at(0)? != GLB_MAGIC {
        return Err(err("bad magic"));
    }
    if u32_at(4)? != 2 {
        return Err(err("unsupported glTF version"));
    }
    let mut offset = 12;
    let mut doc: Option<Value> = None;
    let mut bin: &[u8] = &[];
    while offset + 8 <= bytes.len() {
        let len = u32_at(offset)? as usize;
        let kind = u32_at(offset + 4)?;
        let data = bytes
            .get(offset + 8..offset + 8 + len)
            .ok_or_else(|| err("chunk overruns file"))?;
        match kind {
            CHUNK_JSON => doc = Some(serde_json::from_slice(data)?),
            CHUNK_BIN => bin = data,
            _ => {}
        }
        offset += 8 + len;
    }
    let doc = doc.ok_or_else(|| err("missing JSON chunk"))?;
    let reader = GltfReader { doc: &doc, bin };

    let scene_idx = doc["scene"].as_u64().unwrap_or(0) as usize;
    let roots: Vec<usize> = match doc["scenes"].get(scene_idx) {
        Some(scene) => json_indices(&scene["nodes"]),
        None => (0..doc["nodes"].as_array().map_or(0, |a| a.len())).collect(),
    };
    let mut out = Vec::new();
    for root in roots {
        reader.visit(root, Matrix4::identity(), &mut out, 0)?;
    }
    Ok(out)
}

fn json_indices(v: &Value) -> Vec<usize> {
    v.as_array()
        .map(|a| a.iter().filter_map(|x| x.as_u64()).map(|x| x as usize).collect())
        .unwrap_or_default()
}

fn json_f64s(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(|x| x.as_f64()).collect()
}

struct GltfReader<'a> {
    doc: &'a Value,
    bin: &'a [u8],
}

impl GltfReader<'_> {
    fn visit(
        &self,
        node_idx: usize,
        parent: Matrix4<f64>,
        out: &mut Vec<(String, TriangleMesh)>,
        depth: usize,
    ) -> Result<()> {
        if depth > 64 {
            return Err(Error::parse("glb", "node hierarchy too deep"));
        }
        let node = &self.doc["nodes"][node_idx];
        let world = parent * node_matrix(node);
        if let Some(mesh_idx) = node["mesh"].as_u64() {
            let name = node["name"]
                .as_str()
                .map(str::to_string)
                .unwrap_or_else(|| format!("node_{node_idx}"));
            let mesh = self.read_mesh(mesh_idx as usize, &world)?;
            out.push((name, mesh));
        }
        for child in json_indices(&node["children"]) {
            self.visit(child, world, out, depth + 1)?;
        }
        Ok(())
    }

    fn read_mesh(&self, idx: usize, world: &Matrix4<f64>) -> Result<TriangleMesh> {
        let mut vertices = Vec::new();
        let mut colors = Vec::new();
        let mut triangles = Vec::new();
        let prims = self.doc["meshes"][idx]["primitives"]
            .as_array()
            .ok_or_else(|| Error::parse("glb", "mesh without primitives"))?;
        for prim in prims {
            let mode = prim["mode"].as_u64().unwrap_or(4);
            if mode != 4 {
                continue;
            }
            let base = vertices.len() as u32;
            let pos_acc = prim["attributes"]["POSITION"]
                .as_u64()
                .ok_or_else(|| Error::parse("glb", "primitive without POSITION"))?;
            let positions = self.read_accessor(pos_acc as usize)?;
            for p in &positions {
                let local = nalgebra::Point3::new(p[0], p[1], p[2]);
                let w = world.transform_point(&local);
                vertices.push(from_gltf_frame([w.x, w.y, w.z]));
            }
            match prim["attributes"]["COLOR_0"].as_u64() {
                Some(c) => {
                    let cols = self.read_accessor(c as usize)?;
                    colors.extend(cols.iter().map(|c| [c[0], c[1], c[2]]));
                }
                None => colors.extend(std::iter::repeat_n(DEFAULT_ALBEDO, positions.len())),
            }
            let indices: Vec<u32> = match prim["indices"].as_u64() {
                Some(i) => self
                    .read_accessor(i as usize)?
                    .iter()
                    .map(|v| v[0] as u32)
                    .collect(),
                None => (0..positions.len() as u32).collect(),
            };
            for t in indices.chunks_exact(3) {
                triangles.push([t[0] + base, t[1] + base, t[2] + base]);
            }
        }
        TriangleMesh::with_colors(vertices, triangles, colors)
    }

    /// Reads an accessor as rows of f64 (normalized integer types are scaled
    /// to `[0, 1]`).
    fn read_accessor(&self, idx: usize) -> Result<Vec<Vec<f64>>> {
        let err = |m: String| Error::parse("glb accessor", m);
        let acc = &self.doc["accessors"][idx];
        let count = acc["count"].as_u64().ok_or_else(|| err("no count".into()))? as usize;
        let comps = match acc["type"].as_str() {
            Some("SCALAR") => 1,
            Some("VEC2") => 2,
            Some("VEC3") => 3,
            Some("VEC4") => 4,
            other => return Err(err(format!("unsupported type {other:?}"))),
        };
        let ctype = acc["componentType"].as_u64().unwrap_or(0);
        let csize = match ctype {
            5120 | 5121 => 1,
            5122 | 5123 => 2,
            5125 | 5126 => 4,
            other => return Err(err(format!("unsupported component type {other}"))),
        };
        let normalized = acc["normalized"].as_bool().unwrap_or(false);
        let view = &self.doc["bufferViews"][acc["bufferView"]
            .as_u64()
            .ok_or_else(|| err("sparse/unbacked accessors unsupported".into()))?
            as usize];
        if view["buffer"].as_u64().unwrap_or(0) != 0 {
            return Err(err("external buffers unsupported".into()));
        }
        let start = view["byteOffset"].as_u64().unwrap_or(0) as usize
            + acc["byteOffset"].as_u64().unwrap_or(0) as usize;
        let stride = view["byteStride"]
            .as_u64()
            .map(|s| s as usize)
            .unwrap_or(comps * csize);
        let mut rows = Vec::with_capacity(count);
        for i in 0..count {
            let mut row = Vec::with_capacity(comps);
            for c in 0..comps {
                let o = start + i * stride + c * csize;
                let b = self
                    .bin
                    .get(o..o + csize)
                    .ok_or_else(|| err("accessor overruns buffer".into()))?;
                let v = match ctype {
                    5126 => f32::from_le_bytes(b.try_into().unwrap()) as f64,
                    5125 => u32::from_le_bytes(b.try_into().unwrap()) as f64,
                    5123 => {
                        let v = u16::from_le_bytes(b.try_into().unwrap()) as f64;
                        if normalized {
                            v / 65535.0
                        } else {
                            v
                        }
                    }
                    5122 => {
                        let v = i16::from_le_bytes(b.try_into().unwrap()) as f64;
                        if normalized {
                            (v / 32767.0).max(-1.0)
                        } else {
                            v
                        }
                    }
                    5121 => {
                        if normalized {
                            b[0] as f64 / 255.0
                        } else {
                            b[0] as f64
                        }
                    }
                    _ => {
                        let v = b[0] as i8 as f64;
                        if normalized {
                            (v / 127.0).max(-1.0)
                        } else {
                            v
                        }
                    }
                };
                row.push(v);
            }
            rows.push(row);
        }
        Ok(rows)
    }
}

fn node_matrix(node: &Value) -> Matrix4<f64> {
    if let Some(m) = json_f64s(&node["matrix"]).filter(|m| m.len() == 16) {
        return Matrix4::from_column_slice(&m);
    }
    let t = json_f64s(&node["translation"])
        .filter(|v| v.len() == 3)
        .map(|v| Vector3::new(v[0], v[1], v[2]))
        .unwrap_or_else(Vector3::zeros);
    let r = json_f64s(&node["rotation"])
        .filter(|v| v.len() == 4)
        .map(|q| UnitQuaternion::from_quaternion(Quaternion::new(q[3], q[0], q[1], q[2])))
        .unwrap_or_else(UnitQuaternion::identity);
    let s = json_f64s(&node["scale"])
        .filter(|v| v.len() == 3)
        .map(|v| Vector3::new(v[0], v[1], v[2]))
        .unwrap_or_else(|| Vector3::repeat(1.0));
    Matrix4::new_translation(&t) * r.to_homogeneous() * Matrix4::new_nonuniform_scaling(&s)
}

/// Groups meshes by node name, merging duplicates. Handy for scene re-import.
pub fn glb_meshes_by_name(bytes: &[u8]) -> Result<BTreeMap<String, TriangleMesh>> {
    let mut grouped: BTreeMap<String, Vec<TriangleMesh>> = BTreeMap::new();
    for (name, mesh) in parse_glb(bytes)? {
        grouped.entry(name).or_default().push(mesh);
    }
    Ok(grouped
        .into_iter()
        .map(|(k, v)| {
            let refs: Vec<&TriangleMesh> = v.iter().collect();
            (k, TriangleMesh::merge(&refs))
        })
        .collect())
}
