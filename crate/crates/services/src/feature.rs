use std::sync::Arc;

use serde_json::json;
use sha2::{Digest, Sha256};
use tablescene::image::RgbImage;
use tablescene::losses::{FeatureExtractor, FeatureVector};

use crate::client::ServiceClient;
use crate::queries::parse_feature_vector;
use crate::request::{EndpointKind, ServiceRequest};

/// Appearance features computed by the feature endpoint. Images travel as
/// PNG attachments; replay works like any other endpoint.
pub struct RemoteFeatureExtractor {
    client: Arc<ServiceClient>,
    model: String,
    len: usize,
}

impl RemoteFeatureExtractor {
    pub fn new(client: Arc<ServiceClient>, model: impl Into<String>, len: usize) -> Self {
        Self {
            client,
            model: model.into(),
            len,
        }
    }

    pub fn request(&self, image: &RgbImage) -> tablescene::Result<ServiceRequest> {
        let png = image.to_png_bytes()?;
        let sha = hex::encode(Sha256::digest(&png));
        Ok(ServiceRequest::with_attachment(
            EndpointKind::FeatureExtract,
            json!({ "model": self.model, "image_sha256": sha }),
            png,
        ))
    }
}

fn service_failure(reason: String) -> tablescene::Error {
    tablescene::Error::Parse {
        context: "feature service".into(),
        reason,
    }
}

impl FeatureExtractor for RemoteFeatureExtractor {
    fn name(&self) -> &str {
        &self.model
    }

    fn len(&self) -> usize {
        self.len
    }

    fn extract(&self, image: &RgbImage) -> tablescene::Result<FeatureVector> {
        let req = self.request(image)?;
        let values = self
            .client
            .call_json(&req)
            .and_then(|v| parse_feature_vector(&v))
            .map_err(|e| service_failure(e.to_string()))?;
        if values.len() != self.len {
            return Err(service_failure(format!(
                "expected {} values, got {}",
                self.len,
                values.len()
            )));
        }
        Ok(FeatureVector {
            extractor: self.model.clone(),
            values,
        })
    }
}
