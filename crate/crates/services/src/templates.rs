//! Versioned prompt templates, one per endpoint kind. Live requests send the
//! template verbatim followed by the canonical JSON parameters.

use serde_json::Value;

use crate::request::{canonical_json, EndpointKind};

pub fn template(kind: EndpointKind) -> &'static str {
    match kind {
        EndpointKind::ExpandPrompt => include_str!("../templates/expand_prompt.txt"),
        EndpointKind::DetectCategories => include_str!("../templates/detect_categories.txt"),
        EndpointKind::CompleteInstance => include_str!("../templates/complete_instance.txt"),
        EndpointKind::SynthTopview => include_str!("../templates/synth_topview.txt"),
        EndpointKind::ImageToMesh => include_str!("../templates/image_to_mesh.txt"),
        EndpointKind::SizePrior => include_str!("../templates/size_prior.txt"),
        EndpointKind::StackingOrder => include_str!("../templates/stacking_order.txt"),
        EndpointKind::CameraInit => include_str!("../templates/camera_init.txt"),
        EndpointKind::UpAxisHint => include_str!("../templates/up_axis_hint.txt"),
        EndpointKind::FeatureExtract => include_str!("../templates/feature_extract.txt"),
    }
}

/// First line of a template is `template: <kind> v<N>`.
pub fn template_version(kind: EndpointKind) -> &'static str {
    template(kind)
        .lines()
        .next()
        .and_then(|l| l.rsplit(' ').next())
        .unwrap_or("v0")
}

pub fn render_prompt(kind: EndpointKind, params: &Value) -> String {
    format!("{}\nParameters: {}\n", template(kind), canonical_json(params))
}
