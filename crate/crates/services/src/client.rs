use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{MissingFixture, Result, ServiceError};
use crate::request::{EndpointKind, ServiceRequest};
use crate::store::FixtureStore;
use crate::templates::{render_prompt, template_version};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Record,
    #[default]
    Replay,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Live => "live",
            Mode::Record => "record",
            Mode::Replay => "replay",
        })
    }
}

impl FromStr for Mode {
    type Err = ServiceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "live" => Ok(Mode::Live),
            "record" => Ok(Mode::Record),
            "replay" => Ok(Mode::Replay),
            other => Err(ServiceError::Parse(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub media_type: String,
    pub body: Vec<u8>,
}

impl Response {
    pub fn json(&self) -> Result<Value> {
        Ok(serde_json::from_slice(&self.body)?)
    }
}

/// Sends one request to a provider. Only used in live and record modes.
pub trait Transport: Send + Sync {
    fn send(&self, req: &ServiceRequest, prompt: &str) -> Result<Response>;
}

/// Provider endpoints per kind. Keys come from the environment variable
/// named by `api_key_env`; an endpoint URL can be overridden with
/// `TABLESCENE_ENDPOINT_<KIND>` (kind upper-cased).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub endpoints: BTreeMap<EndpointKind, String>,
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            endpoints: BTreeMap::new(),
            api_key_env: "TABLESCENE_API_KEY".into(),
            timeout_secs: 120,
            max_in_flight: 4,
        }
    }
}

impl ProviderConfig {
    pub fn endpoint(&self, kind: EndpointKind) -> Option<String> {
        let var = format!("TABLESCENE_ENDPOINT_{}", kind.as_str().to_ascii_uppercase());
        std::env::var(var)
            .ok()
            .or_else(|| self.endpoints.get(&kind).cloned())
    }
}

/// JSON-over-HTTP transport. The body carries the prompt, the raw
/// parameters and an optional base64 attachment; the response body is
/// returned verbatim.
pub struct HttpTransport {
    config: ProviderConfig,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(config: ProviderConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }
}

impl Transport for HttpTransport {
    fn send(&self, req: &ServiceRequest, prompt: &str) -> Result<Response> {
        let url = self
            .config
            .endpoint(req.kind())
            .ok_or(ServiceError::NoProvider(req.kind()))?;
        let mut body = json!({
            "kind": req.kind(),
            "template_version": template_version(req.kind()),
            "prompt": prompt,
            "params": req.payload(),
        });
        if let Some(bytes) = req.attachment() {
            body["attachment_base64"] =
                Value::String(base64::engine::general_purpose::STANDARD.encode(bytes));
        }
        let mut call = self.agent.post(&url);
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let transport_err = |detail: String, retriable: bool| ServiceError::Transport {
            provider: url.clone(),
            detail,
            retriable,
        };
        let payload = serde_json::to_vec(&body)?;
        let mut resp = call
            .header("Content-Type", "application/json")
            .send(&payload[..])
            .map_err(|e| transport_err(e.to_string(), true))?;
        let status = resp.status().as_u16();
        if status >= 400 {
            return Err(transport_err(
                format!("HTTP {status}"),
                status == 429 || status >= 500,
            ));
        }
        let media_type = resp
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .map(|v| v.split(';').next().unwrap_or(v).trim().to_string())
            .unwrap_or_else(|| req.kind().response_media_type().to_string());
        let bytes = resp
            .body_mut()
            .read_to_vec()
            .map_err(|e| transport_err(e.to_string(), true))?;
        Ok(Response {
            media_type,
            body: bytes,
        })
    }
}

/// Counting semaphore bounding concurrent live calls.
struct InFlight {
    max: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn acquire(&self) -> InFlightGuard<'_> {
        let mut n = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut n = self.0.active.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

pub struct ServiceClient {
    store: FixtureStore,
    mode: Mode,
    transport: Option<Box<dyn Transport>>,
    in_flight: InFlight,
}

impl ServiceClient {
    /// Replay-only client; never touches the network.
    pub fn replay(store: FixtureStore) -> Self {
        Self::new(store, Mode::Replay, None, 1)
    }

    pub fn new(
        store: FixtureStore,
        mode: Mode,
        transport: Option<Box<dyn Transport>>,
        max_in_flight: usize,
    ) -> Self {
        Self {
            store,
            mode,
            transport,
            in_flight: InFlight {
                max: max_in_flight.max(1),
                active: Mutex::new(0),
                freed: Condvar::new(),
            },
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn store(&self) -> &FixtureStore {
        &self.store
    }

    pub fn call(&self, req: &ServiceRequest) -> Result<Response> {
        match self.mode {
            Mode::Replay => {
                let fixture =
                    self.store
                        .get(req.digest())?
                        .ok_or_else(|| ServiceError::ReplayMiss {
                            kind: req.kind(),
                            digest: req.digest().to_string(),
                        })?;
                if fixture.meta.kind != req.kind() {
                    return Err(ServiceError::Parse(format!(
                        "fixture {} is a {} response, requested {}",
                        req.digest(),
                        fixture.meta.kind,
                        req.kind()
                    )));
                }
                Ok(Response {
                    media_type: fixture.meta.media_type,
                    body: fixture.body,
                })
            }
            Mode::Live | Mode::Record => {
                let transport = self
                    .transport
                    .as_ref()
                    .ok_or(ServiceError::NoProvider(req.kind()))?;
                let prompt = render_prompt(req.kind(), req.payload());
                let resp = {
                    let _slot = self.in_flight.acquire();
                    log::debug!("live {} request {}", req.kind(), req.digest());
                    transport.send(req, &prompt)?
                };
                if self.mode == Mode::Record {
                    let stamp = SystemTime::now()
                        .duration_since(UNIX_EPOCH)
                        .map(|d| format!("unix:{}", d.as_secs()))
                        .unwrap_or_default();
                    self.store.record(
                        req.kind(),
                        req.digest(),
                        &resp.media_type,
                        resp.body.clone(),
                        &stamp,
                    )?;
                }
                Ok(resp)
            }
        }
    }

    pub fn call_json(&self, req: &ServiceRequest) -> Result<Value> {
        self.call(req)?.json()
    }

    /// Requests that replay mode could not serve. Empty in live/record mode.
    pub fn missing(&self, requests: &[ServiceRequest]) -> Vec<MissingFixture> {
        if self.mode != Mode::Replay {
            return Vec::new();
        }
        let mut out: Vec<MissingFixture> = requests
            .iter()
            .filter(|r| !self.store.contains(r.digest()))
            .map(|r| MissingFixture {
                kind: r.kind(),
                digest: r.digest().to_string(),
            })
            .collect();
        out.sort_by(|a, b| (&a.digest, a.kind).cmp(&(&b.digest, b.kind)));
        out.dedup();
        out
    }

    /// Fails with the complete missing list before any stage runs.
    pub fn preflight(&self, requests: &[ServiceRequest]) -> Result<()> {
        let missing = self.missing(requests);
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ServiceError::MissingFixtures(missing))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    struct Echo {
        calls: Arc<AtomicUsize>,
    }

    impl Transport for Echo {
        fn send(&self, req: &ServiceRequest, prompt: &str) -> Result<Response> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            assert!(prompt.contains(req.kind().as_str()));
            Ok(Response {
                media_type: "application/json".into(),
                body: serde_json::to_vec(&json!({"size_cm": [30, 20, 5]})).unwrap(),
            })
        }
    }

    #[test]
    fn record_then_replay_is_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let calls = Arc::new(AtomicUsize::new(0));
        let req = ServiceRequest::new(EndpointKind::SizePrior, json!({"id": "book_1", "label": "book"}));
        let recorder = ServiceClient::new(
            FixtureStore::open(dir.path()).unwrap(),
            Mode::Record,
            Some(Box::new(Echo { calls: calls.clone() })),
            2,
        );
        let live = recorder.call(&req).unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 1);

        let replayer = ServiceClient::replay(FixtureStore::open(dir.path()).unwrap());
        let replayed = replayer.call(&req).unwrap();
        assert_eq!(replayed, live);
        assert!(replayer.preflight(&[req]).is_ok());
    }

    #[test]
    fn replay_miss_lists_everything() {
        let dir = tempfile::tempdir().unwrap();
        let client = ServiceClient::replay(FixtureStore::open(dir.path()).unwrap());
        let reqs: Vec<_> = ["a", "b", "c"]
            .iter()
            .map(|id| ServiceRequest::new(EndpointKind::SizePrior, json!({ "id": id })))
            .collect();
        let err = client.call(&reqs[0]).unwrap_err();
        assert!(matches!(err, ServiceError::ReplayMiss { ref digest, .. } if digest == reqs[0].digest()));
        match client.preflight(&reqs).unwrap_err() {
            ServiceError::MissingFixtures(m) => {
                assert_eq!(m.len(), 3);
                for r in &reqs {
                    assert!(m.iter().any(|x| x.digest == r.digest()));
                }
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn live_without_transport_errs() {
        let dir = tempfile::tempdir().unwrap();
        let client = ServiceClient::new(FixtureStore::open(dir.path()).unwrap(), Mode::Live, None, 1);
        let req = ServiceRequest::new(EndpointKind::CameraInit, json!({}));
        assert!(matches!(client.call(&req), Err(ServiceError::NoProvider(_))));
    }

    #[test]
    fn in_flight_limit_holds() {
        struct Slow {
            active: AtomicUsize,
            peak: AtomicUsize,
        }
        impl Transport for Slow {
            fn send(&self, _: &ServiceRequest, _: &str) -> Result<Response> {
                let now = self.active.fetch_add(1, Ordering::SeqCst) + 1;
                self.peak.fetch_max(now, Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(20));
                self.active.fetch_sub(1, Ordering::SeqCst);
                Ok(Response {
                    media_type: "application/json".into(),
                    body: b"{}".to_vec(),
                })
            }
        }
        let slow = Arc::new(Slow {
            active: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        });
        struct Shared(Arc<Slow>);
        impl Transport for Shared {
            fn send(&self, r: &ServiceRequest, p: &str) -> Result<Response> {
                self.0.send(r, p)
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let client = ServiceClient::new(
            FixtureStore::open(dir.path()).unwrap(),
            Mode::Live,
            Some(Box::new(Shared(slow.clone()))),
            2,
        );
        std::thread::scope(|s| {
            for i in 0..6 {
                let client = &client;
                s.spawn(move || {
                    client
                        .call(&ServiceRequest::new(EndpointKind::CameraInit, json!({ "i": i })))
                        .unwrap();
                });
            }
        });
        assert!(slow.peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn mode_parse() {
        for m in [Mode::Live, Mode::Record, Mode::Replay] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        assert!("offline".parse::<Mode>().is_err());
    }
}
