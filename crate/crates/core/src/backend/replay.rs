use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{request_digest, BackendError, CompletionBackend, GenerationParams, RawCompletion};
use crate::io::{parse_jsonl, sha256_hex, to_jsonl, write_atomic};

/// One line of a replay fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub digest: String,
    pub prompt_sha: String,
    pub model_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

pub fn load_fixture(path: &Path) -> Result<Vec<FixtureEntry>, BackendError> {
    let text = fs::read_to_string(path)
        .map_err(|e| BackendError::IoFailure(format!("{}: {e}", path.display())))?;
    parse_jsonl(&text).map_err(|e| BackendError::InvalidFixture(e.to_string()))
}

/// Writes a fixture mapping each request's digest to its completion.
pub fn record_fixture(
    requests: &[(String, GenerationParams)],
    results: &[RawCompletion],
    path: &Path,
) -> Result<Vec<FixtureEntry>, BackendError> {
    if requests.len() != results.len() {
        return Err(BackendError::InvalidFixture(format!(
            "{} requests but {} results",
            requests.len(),
            results.len()
        )));
    }
    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(requests.len());
    for ((prompt, params), result) in requests.iter().zip(results) {
        let digest = request_digest(prompt, params);
        if !seen.insert(digest.clone()) {
            return Err(BackendError::DuplicateDigest(digest));
        }
        entries.push(FixtureEntry {
            digest,
            prompt_sha: sha256_hex(prompt),
            model_id: params.model_id.clone(),
            text: result.text.clone(),
            truncated: result.truncated,
        });
    }
    let body = to_jsonl(&entries).map_err(|e| BackendError::IoFailure(e.to_string()))?;
    write_atomic(path, body.as_bytes())?;
    Ok(entries)
}

/// Serves completions from a recorded fixture.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    entries: HashMap<String, FixtureEntry>,
}

impl ReplayBackend {
    pub fn new(entries: Vec<FixtureEntry>) -> Self {
        ReplayBackend {
            entries: entries.into_iter().map(|e| (e.digest.clone(), e)).collect(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, BackendError> {
        Ok(Self::new(load_fixture(path)?))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl CompletionBackend for ReplayBackend {
    fn backend_id(&self) -> &str {
        "replay"
    }

    fn complete(
        &self,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<RawCompletion, BackendError> {
        let digest = request_digest(prompt, params);
        match self.entries.get(&digest) {
            Some(entry) => Ok(RawCompletion {
                text: entry.text.clone(),
                backend_id: "replay".into(),
                cached: true,
                request_digest: digest,
                truncated: entry.truncated,
            }),
            None => Err(BackendError::ReplayMiss { digest }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::StubBackend;

    fn requests(n: usize) -> Vec<(String, GenerationParams)> {
        (0..n)
            .map(|i| (format!("Source: text {i}\n"), GenerationParams::new("m")))
            .collect()
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fx.jsonl");
        let stub = StubBackend::new("why\n[Transferred]: {source} ({sample_index})");
        let reqs = requests(5);
        let live: Vec<_> = reqs
            .iter()
            .map(|(p, q)| stub.complete(p, q).unwrap())
            .collect();
        record_fixture(&reqs, &live, &path).unwrap();

        let replay = ReplayBackend::from_path(&path).unwrap();
        for ((p, q), expected) in reqs.iter().zip(&live) {
            let got = replay.complete(p, q).unwrap();
            assert_eq!(got.text, expected.text);
            assert_eq!(got.request_digest, expected.request_digest);
            assert!(got.cached);
        }
    }

    #[test]
    fn replay_miss() {
        let replay = ReplayBackend::new(vec![]);
        let err = replay
            .complete("x", &GenerationParams::new("m"))
            .unwrap_err();
        assert!(matches!(err, BackendError::ReplayMiss { .. }));
    }

    #[test]
    fn duplicate_digest_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let reqs = vec![
            ("same".to_string(), GenerationParams::new("m")),
            ("same".to_string(), GenerationParams::new("m")),
        ];
        let stub = StubBackend::new("t");
        let res: Vec<_> = reqs
            .iter()
            .map(|(p, q)| stub.complete(p, q).unwrap())
            .collect();
        let err = record_fixture(&reqs, &res, &dir.path().join("f.jsonl")).unwrap_err();
        assert!(matches!(err, BackendError::DuplicateDigest(_)));
    }

    #[test]
    fn fixture_keys_recompute() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fx.jsonl");
        let reqs = requests(3);
        let stub = StubBackend::new("t");
        let res: Vec<_> = reqs
            .iter()
            .map(|(p, q)| stub.complete(p, q).unwrap())
            .collect();
        record_fixture(&reqs, &res, &path).unwrap();
        // re-read from bytes alone and recompute the keys
        let entries = load_fixture(&path).unwrap();
        for ((p, q), e) in reqs.iter().zip(&entries) {
            assert_eq!(e.digest, request_digest(p, q));
            assert_eq!(e.prompt_sha, sha256_hex(p));
        }
    }
}
