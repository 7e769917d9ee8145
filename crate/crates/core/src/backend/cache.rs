use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{request_digest, BackendError, CompletionBackend, GenerationParams, RawCompletion};
use crate::io::write_atomic;

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    text: String,
    backend_id: String,
    #[serde(default)]
    truncated: bool,
}

/// Digest-keyed on-disk cache in front of another backend.
///
/// Entries are written with an atomic rename; two workers racing on one
/// key write identical bytes, so no locking is needed.
pub struct CachedBackend<B> {
    inner: B,
    dir: PathBuf,
}

impl<B: CompletionBackend> CachedBackend<B> {
    pub fn new(inner: B, dir: impl Into<PathBuf>) -> Self {
        CachedBackend {
            inner,
            dir: dir.into(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_path(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }
}

impl<B: CompletionBackend> CompletionBackend for CachedBackend<B> {
    fn backend_id(&self) -> &str {
        self.inner.backend_id()
    }

    fn complete(
        &self,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<RawCompletion, BackendError> {
        let digest = request_digest(prompt, params);
        let path = self.entry_path(&digest);
        if let Ok(bytes) = fs::read(&path) {
            if let Ok(entry) = serde_json::from_slice::<CacheEntry>(&bytes) {
                return Ok(RawCompletion {
                    text: entry.text,
                    backend_id: entry.backend_id,
                    cached: true,
                    request_digest: digest,
                    truncated: entry.truncated,
                });
            }
            tracing::warn!(path = %path.display(), "ignoring unreadable cache entry");
        }
        let fresh = self.inner.complete(prompt, params)?;
        let entry = CacheEntry {
            text: fresh.text.clone(),
            backend_id: fresh.backend_id.clone(),
            truncated: fresh.truncated,
        };
        let bytes =
            serde_json::to_vec(&entry).map_err(|e| BackendError::IoFailure(e.to_string()))?;
        write_atomic(&path, &bytes)?;
        Ok(fresh)
    }
}
