//! Boundary to external generative and reasoning services.
//!
//! Every call is keyed by a digest of its endpoint kind and canonical
//! payload. In replay mode responses come verbatim from a content-addressed
//! fixture directory and nothing touches the network; record mode performs
//! the live call and stores the response under the same digest.

mod client;
mod error;
mod feature;
pub mod queries;
mod request;
mod store;
pub mod templates;

pub use client::{HttpTransport, Mode, ProviderConfig, Response, ServiceClient, Transport};
pub use error::{MissingFixture, Result, ServiceError};
pub use feature::RemoteFeatureExtractor;
pub use request::{canonical_json, EndpointKind, ServiceRequest};
pub use store::{Fixture, FixtureMeta, FixtureStore};
