use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    ExpandPrompt,
    DetectCategories,
    CompleteInstance,
    SynthTopview,
    ImageToMesh,
    SizePrior,
    StackingOrder,
    CameraInit,
    UpAxisHint,
    FeatureExtract,
}

impl EndpointKind {
    pub const ALL: [EndpointKind; 10] = [
        EndpointKind::ExpandPrompt,
        EndpointKind::DetectCategories,
        EndpointKind::CompleteInstance,
        EndpointKind::SynthTopview,
        EndpointKind::ImageToMesh,
        EndpointKind::SizePrior,
        EndpointKind::StackingOrder,
        EndpointKind::CameraInit,
        EndpointKind::UpAxisHint,
        EndpointKind::FeatureExtract,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EndpointKind::ExpandPrompt => "expand_prompt",
            EndpointKind::DetectCategories => "detect_categories",
            EndpointKind::CompleteInstance => "complete_instance",
            EndpointKind::SynthTopview => "synth_topview",
            EndpointKind::ImageToMesh => "image_to_mesh",
            EndpointKind::SizePrior => "size_prior",
            EndpointKind::StackingOrder => "stacking_order",
            EndpointKind::CameraInit => "camera_init",
            EndpointKind::UpAxisHint => "up_axis_hint",
            EndpointKind::FeatureExtract => "feature_extract",
        }
    }

    /// Media type expected back from a provider.
    pub fn response_media_type(self) -> &'static str {
        match self {
            EndpointKind::CompleteInstance | EndpointKind::SynthTopview => "image/png",
            EndpointKind::ImageToMesh => "model/gltf-binary",
            _ => "application/json",
        }
    }
}

impl fmt::Display for EndpointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EndpointKind {
    type Err = ServiceError;

    fn from_str(s: &str) -> Result<Self, ServiceError> {
        EndpointKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ServiceError::Parse(format!("unknown endpoint kind '{s}'")))
    }
}

/// Compact JSON with object keys sorted at every level.
///
/// `serde_json::Value` objects are ordered maps, so a round trip through
/// `Value` sorts keys regardless of the input order.
pub fn canonical_json(v: &Value) -> String {
    serde_json::to_string(v).expect("Value always serializes")
}

/// One call to an external service, identified by a content digest.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceRequest {
    kind: EndpointKind,
    payload: Value,
    attachment: Option<Vec<u8>>,
    digest: String,
}

impl ServiceRequest {
    pub fn new(kind: EndpointKind, payload: Value) -> Self {
        Self::build(kind, payload, None)
    }

    /// Request carrying a binary body (an image, usually) next to the JSON
    /// parameters. The body is part of the digest.
    pub fn with_attachment(kind: EndpointKind, payload: Value, attachment: Vec<u8>) -> Self {
        Self::build(kind, payload, Some(attachment))
    }

    fn build(kind: EndpointKind, payload: Value, attachment: Option<Vec<u8>>) -> Self {
        let mut h = Sha256::new();
        h.update(kind.as_str().as_bytes());
        h.update([0u8]);
        h.update(canonical_json(&payload).as_bytes());
        if let Some(bytes) = &attachment {
            h.update([0u8]);
            h.update(bytes);
        }
        Self {
            kind,
            payload,
            attachment,
            digest: hex::encode(h.finalize()),
        }
    }

    pub fn kind(&self) -> EndpointKind {
        self.kind
    }

    pub fn payload(&self) -> &Value {
        &self.payload
    }

    pub fn attachment(&self) -> Option<&[u8]> {
        self.attachment.as_deref()
    }

    /// Lowercase hex SHA-256.
    pub fn digest(&self) -> &str {
        &self.digest
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn digest_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"label":"mug","id":"mug_1","n":{"b":1,"a":2}}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"n":{"a":2,"b":1},"id":"mug_1","label":"mug"}"#).unwrap();
        let ra = ServiceRequest::new(EndpointKind::SizePrior, a);
        let rb = ServiceRequest::new(EndpointKind::SizePrior, b);
        assert_eq!(ra.digest(), rb.digest());
        assert_eq!(ra.digest().len(), 64);
    }

    #[test]
    fn digest_depends_on_kind_and_attachment() {
        let p = json!({"id": "x"});
        let a = ServiceRequest::new(EndpointKind::SizePrior, p.clone());
        let b = ServiceRequest::new(EndpointKind::CameraInit, p.clone());
        let c = ServiceRequest::with_attachment(EndpointKind::SizePrior, p.clone(), vec![1, 2]);
        let d = ServiceRequest::with_attachment(EndpointKind::SizePrior, p, vec![1, 3]);
        assert_ne!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
        assert_ne!(c.digest(), d.digest());
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in EndpointKind::ALL {
            assert_eq!(k.as_str().parse::<EndpointKind>().unwrap(), k);
            assert_eq!(serde_json::to_value(k).unwrap(), Value::String(k.as_str().into()));
        }
        assert!("nope".parse::<EndpointKind>().is_err());
    }
}
