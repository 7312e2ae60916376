//! Content-addressed fixture directory.
//!
//! Each fixture is two files: `<digest>.meta.json` (kind, media type,
//! recording metadata) and `<digest>.<ext>` holding the response bytes
//! verbatim. Binary responses such as meshes live beside the JSON ones.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use tablescene::jsonfmt::to_stable_string;

use crate::error::{Result, ServiceError};
use crate::request::EndpointKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureMeta {
    pub digest: String,
    pub kind: EndpointKind,
    pub media_type: String,
    /// Free-form provenance, e.g. a timestamp or "hand-authored".
    pub recorded_at: String,
    /// Response file name relative to the store root.
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub meta: FixtureMeta,
    pub body: Vec<u8>,
}

fn extension_for(media_type: &str) -> &'static str {
    match media_type {
        "application/json" => "json",
        "image/png" => "png",
        "model/gltf-binary" => "glb",
        "model/obj" | "text/plain" => "obj",
        _ => "bin",
    }
}

fn is_digest(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_hexdigit())
}

#[derive(Debug)]
pub struct FixtureStore {
    root: PathBuf,
    write_lock: Mutex<()>,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl FixtureStore {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| ServiceError::io(&root, e))?;
        Ok(Self {
            root,
            write_lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn meta_path(&self, digest: &str) -> PathBuf {
        self.root.join(format!("{digest}.meta.json"))
    }

    pub fn contains(&self, digest: &str) -> bool {
        self.meta_path(digest).is_file()
    }

    pub fn get(&self, digest: &str) -> Result<Option<Fixture>> {
        let meta_path = self.meta_path(digest);
        let text = match fs::read_to_string(&meta_path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(ServiceError::io(&meta_path, e)),
        };
        let meta: FixtureMeta = serde_json::from_str(&text)?;
        if meta.digest != digest {
            return Err(ServiceError::Parse(format!(
                "fixture {} records digest {}",
                meta_path.display(),
                meta.digest
            )));
        }
        let body_path = self.root.join(&meta.body);
        let body = fs::read(&body_path).map_err(|e| ServiceError::io(&body_path, e))?;
        Ok(Some(Fixture { meta, body }))
    }

    /// Writes both files atomically (temp file + rename). Writes are
    /// serialized per store.
    pub fn put(&self, fixture: &Fixture) -> Result<()> {
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let meta = &fixture.meta;
        if !is_digest(&meta.digest) {
            return Err(ServiceError::Parse(format!("bad digest '{}'", meta.digest)));
        }
        self.write_atomic(&self.root.join(&meta.body), &fixture.body)?;
        self.write_atomic(&self.meta_path(&meta.digest), to_stable_string(meta)?.as_bytes())
    }

    /// Convenience for recording: derives the body file name from the media
    /// type.
    pub fn record(
        &self,
        kind: EndpointKind,
        digest: &str,
        media_type: &str,
        body: Vec<u8>,
        recorded_at: &str,
    ) -> Result<Fixture> {
        let fixture = Fixture {
            meta: FixtureMeta {
                digest: digest.to_string(),
                kind,
                media_type: media_type.to_string(),
                recorded_at: recorded_at.to_string(),
                body: format!("{digest}.{}", extension_for(media_type)),
            },
            body,
        };
        self.put(&fixture)?;
        Ok(fixture)
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let tmp = path.with_extension(format!("tmp{}-{n}", std::process::id()));
        fs::write(&tmp, bytes).map_err(|e| ServiceError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| ServiceError::io(path, e))
    }

    /// All digests with a metadata file, sorted.
    pub fn digests(&self) -> Result<BTreeSet<String>> {
        let entries = fs::read_dir(&self.root).map_err(|e| ServiceError::io(&self.root, e))?;
        let mut out = BTreeSet::new();
        for entry in entries {
            let entry = entry.map_err(|e| ServiceError::io(&self.root, e))?;
            let name = entry.file_name();
            if let Some(d) = name.to_str().and_then(|n| n.strip_suffix(".meta.json")) {
                if is_digest(d) {
                    out.insert(d.to_string());
                }
            }
        }
        Ok(out)
    }
}
