//! Request builders and response parsers for the reasoning endpoints.
//!
//! Response schemas are versioned by the template that asks for them. The
//! parsers accept a few equivalent spellings so hand-authored fixtures stay
//! readable.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use tablescene::geometry::UpAxisHint;
use tablescene::raster::Camera;
use tablescene::tsa::{SizePrior, StackingGraph};

use crate::error::{Result, ServiceError};
use crate::request::{EndpointKind, ServiceRequest};

/// Accepted range for any prior dimension, meters.
pub const SIZE_RANGE_M: (f64, f64) = (0.001, 10.0);

pub fn size_prior_request(id: &str, label: &str) -> ServiceRequest {
    ServiceRequest::new(EndpointKind::SizePrior, json!({ "id": id, "label": label }))
}

/// `ids` in any order; the payload lists them sorted.
pub fn stacking_request(scene: &str, ids: &[String]) -> ServiceRequest {
    let sorted: BTreeSet<&String> = ids.iter().collect();
    ServiceRequest::new(
        EndpointKind::StackingOrder,
        json!({ "scene": scene, "instances": sorted }),
    )
}

pub fn camera_init_request(scene: &str, reference_sha256: &str) -> ServiceRequest {
    ServiceRequest::new(
        EndpointKind::CameraInit,
        json!({ "scene": scene, "reference_sha256": reference_sha256 }),
    )
}

pub fn up_axis_request(id: &str, mesh_sha256: &str) -> ServiceRequest {
    ServiceRequest::new(
        EndpointKind::UpAxisHint,
        json!({ "id": id, "mesh_sha256": mesh_sha256 }),
    )
}

fn number(v: &Value, instance: &str, what: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ServiceError::invalid(instance, format!("{what} is not a finite number")))
}

fn triple(v: &Value, instance: &str, what: &str) -> Result<[f64; 3]> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| ServiceError::invalid(instance, format!("{what} must have 3 entries")))?;
    Ok([
        number(&arr[0], instance, what)?,
        number(&arr[1], instance, what)?,
        number(&arr[2], instance, what)?,
    ])
}

fn object<'a>(v: &'a Value, instance: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| ServiceError::invalid(instance, "response is not a JSON object"))
}

/// Size prior in meters.
///
/// Accepts `{"size_cm": [w, d, h]}`, `{"size_m": [w, d, h]}` or separate
/// `width_cm` / `depth_cm` / `height_cm` fields, plus an optional
/// `confidence` string.
pub fn parse_size_prior(id: &str, response: &Value) -> Result<SizePrior> {
    let obj = object(response, id)?;
    let dims = if let Some(v) = obj.get("size_m") {
        triple(v, id, "size_m")?
    } else if let Some(v) = obj.get("size_cm") {
        triple(v, id, "size_cm")?.map(|c| c / 100.0)
    } else {
        let mut out = [0.0; 3];
        for (k, key) in ["width_cm", "depth_cm", "height_cm"].into_iter().enumerate() {
            let v = obj
                .get(key)
                .ok_or_else(|| ServiceError::invalid(id, format!("missing {key}")))?;
            out[k] = number(v, id, key)? / 100.0;
        }
        out
    };
    for (d, name) in dims.iter().zip(["width", "depth", "height"]) {
        if !(SIZE_RANGE_M.0..=SIZE_RANGE_M.1).contains(d) {
            return Err(ServiceError::invalid(
                id,
                format!("{name} {d} m outside [{}, {}] m", SIZE_RANGE_M.0, SIZE_RANGE_M.1),
            ));
        }
    }
    let confidence = match obj.get("confidence") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(ServiceError::invalid(id, "confidence must be a string")),
    };
    Ok(SizePrior {
        id: id.to_string(),
        width: dims[0],
        depth: dims[1],
        height: dims[2],
        confidence,
    })
}

/// Inverse of [`parse_size_prior`], in meters so the round trip is exact.
pub fn size_prior_to_json(p: &SizePrior) -> Value {
    let mut v = json!({ "size_m": [p.width, p.depth, p.height] });
    if let Some(c) = &p.confidence {
        v["confidence"] = Value::String(c.clone());
    }
    v
}

fn stacking_edge(entry: &Value) -> Result<(String, String)> {
    match entry {
        Value::Object(o) => {
            let get = |k: &str| {
                o.get(k)
                    .and_then(Value::as_str)
                    .map(str::to_string)
                    .ok_or_else(|| ServiceError::invalid("stacking", format!("entry lacks '{k}'")))
            };
            Ok((get("top")?, get("bottom")?))
        }
        Value::String(s) => {
            let words: Vec<&str> = s.split_whitespace().collect();
            match words.as_slice() {
                [a, "above" | "on", b] => Ok((a.to_string(), b.to_string())),
                _ => Err(ServiceError::invalid(
                    "stacking",
                    format!("cannot read '{s}', expected '<top> above <bottom>'"),
                )),
            }
        }
        _ => Err(ServiceError::invalid("stacking", "entry must be an object or string")),
    }
}

/// Stacking graph checked against `known` ids (table included).
///
/// Accepts `{"stacking": [...]}` or a bare list; entries are
/// `{"top": a, "bottom": b}` or `"a above b"`.
pub fn parse_stacking(response: &Value, known: &[String], table_id: &str) -> Result<StackingGraph> {
    let list = match response {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("stacking")
            .and_then(Value::as_array)
            .ok_or_else(|| ServiceError::invalid("stacking", "missing 'stacking' list"))?,
        _ => return Err(ServiceError::invalid("stacking", "response must be a list or object")),
    };
    let mut edges = list.iter().map(stacking_edge).collect::<Result<Vec<_>>>()?;
    edges.sort();
    edges.dedup();
    let graph = StackingGraph::new(edges);
    graph.topological_order(known, table_id)?;
    Ok(graph)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraInit {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

impl CameraInit {
    /// Orbit camera at the default distance and resolution.
    pub fn camera(&self) -> Camera {
        Camera {
            azimuth_deg: self.azimuth_deg,
            elevation_deg: self.elevation_deg,
            ..Camera::default()
        }
    }
}

pub fn parse_camera_init(response: &Value) -> Result<CameraInit> {
    let obj = object(response, "camera_init")?;
    let get = |k: &str| {
        obj.get(k)
            .ok_or_else(|| ServiceError::invalid("camera_init", format!("missing {k}")))
            .and_then(|v| number(v, "camera_init", k))
    };
    let init = CameraInit {
        azimuth_deg: get("azimuth_deg")?,
        elevation_deg: get("elevation_deg")?,
    };
    if !(0.0..=90.0).contains(&init.elevation_deg) {
        return Err(ServiceError::invalid(
            "camera_init",
            format!("elevation {} outside [0, 90]", init.elevation_deg),
        ));
    }
    Ok(init)
}

/// `{"up": "+y", "front": "-z"}`; `front` is optional.
pub fn parse_up_axis_hint(id: &str, response: &Value) -> Result<UpAxisHint> {
    let obj = object(response, id)?;
    let up = obj
        .get("up")
        .and_then(Value::as_str)
        .ok_or_else(|| ServiceError::invalid(id, "missing 'up'"))?;
    let text = match obj.get("front").and_then(Value::as_str) {
        Some(front) => format!("{up} up, {front} front"),
        None => format!("{up} up"),
    };
    text.parse()
        .map_err(|e: tablescene::Error| ServiceError::invalid(id, e.to_string()))
}

/// Flat JSON array of finite numbers.
pub fn parse_feature_vector(response: &Value) -> Result<Vec<f64>> {
    response
        .as_array()
        .ok_or_else(|| ServiceError::invalid("feature_extract", "response is not an array"))?
        .iter()
        .map(|v| number(v, "feature_extract", "feature entry"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn size_prior_units() {
        let p = parse_size_prior("book_1", &json!({"size_cm": [30, 20, 5]})).unwrap();
        assert_eq!((p.width, p.depth, p.height), (0.30, 0.20, 0.05));
        let q = parse_size_prior(
            "book_1",
            &json!({"width_cm": 30, "depth_cm": 20, "height_cm": 5, "confidence": "high"}),
        )
        .unwrap();
        assert_eq!((q.width, q.depth, q.height), (0.30, 0.20, 0.05));
        assert_eq!(q.confidence.as_deref(), Some("high"));
    }

    #[test]
    fn size_prior_validation_names_instance() {
        for bad in [
            json!({"size_cm": [-3, 20, 5]}),
            json!({"size_cm": [30, 20]}),
            json!({"size_cm": [3000, 20, 5]}),
            json!({"width_cm": 30, "depth_cm": 20}),
            json!([1, 2, 3]),
        ] {
            match parse_size_prior("mug_2", &bad).unwrap_err() {
                ServiceError::Validation { instance, .. } => assert_eq!(instance, "mug_2"),
                other => panic!("{other}"),
            }
        }
    }

    #[test]
    fn size_prior_roundtrip_is_identity() {
        let p = parse_size_prior("x", &json!({"size_cm": [12.3, 4.56, 7.0], "confidence": "low"})).unwrap();
        let again = parse_size_prior("x", &size_prior_to_json(&p)).unwrap();
        assert_eq!(p, again);
        let text = serde_json::to_string(&size_prior_to_json(&p)).unwrap();
        let third = parse_size_prior("x", &serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(p, third);
    }

    #[test]
    fn stacking_forms() {
        let known = ids(&["table", "pen", "book"]);
        let g = parse_stacking(&json!({"stacking": []}), &known, "table").unwrap();
        assert!(g.edges.is_empty());
        let g = parse_stacking(&json!(["pen above book"]), &known, "table").unwrap();
        assert_eq!(g.edges, vec![("pen".to_string(), "book".to_string())]);
        let g = parse_stacking(&json!({"stacking": [{"top": "pen", "bottom": "book"}]}), &known, "table").unwrap();
        assert_eq!(g.supports_of("pen"), ["book"]);
        assert!(parse_stacking(&json!(["pen above book", "book above pen"]), &known, "table").is_err());
        assert!(parse_stacking(&json!(["lamp above book"]), &known, "table").is_err());
        assert!(parse_stacking(&json!(["pen beside book"]), &known, "table").is_err());
    }

    #[test]
    fn camera_and_axis() {
        let c = parse_camera_init(&json!({"azimuth_deg": 10, "elevation_deg": 35.5})).unwrap();
        assert_eq!(c.camera().elevation_deg, 35.5);
        assert!(parse_camera_init(&json!({"azimuth_deg": 10, "elevation_deg": 95})).is_err());
        let h = parse_up_axis_hint("m", &json!({"up": "+y", "front": "-z"})).unwrap();
        assert_eq!(h.to_string(), "+Y up, -Z front");
        assert!(parse_up_axis_hint("m", &json!({"up": "+y", "front": "-y"})).is_err());
    }

    #[test]
    fn request_payloads_are_order_free() {
        let a = stacking_request("s", &ids(&["b", "a"]));
        let b = stacking_request("s", &ids(&["a", "b"]));
        assert_eq!(a.digest(), b.digest());
        assert_eq!(parse_feature_vector(&json!([0.5, 1])).unwrap(), vec![0.5, 1.0]);
    }
}
