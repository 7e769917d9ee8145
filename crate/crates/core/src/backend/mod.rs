//! Completion backends.
//!
//! Every request is content-addressed by [`request_digest`], a SHA-256 over
//! a canonical JSON encoding of the prompt and the generation parameters.
//! Replay fixtures and the on-disk cache are both keyed by that digest, so
//! a run can be reproduced without the live service.

mod batch;
mod cache;
mod live;
mod replay;
mod stub;

use serde::{Deserialize, Serialize};

pub use batch::complete_batch;
pub use cache::CachedBackend;
pub use live::{
    HttpTransport, HttpTransportConfig, LiveBackend, RetryPolicy, Transport, TransportError,
    TransportReply,
};
pub use replay::{load_fixture, record_fixture, FixtureEntry, ReplayBackend};
pub use stub::StubBackend;

use crate::io::sha256_hex;

pub const DEFAULT_TEMPERATURE: f64 = 0.7;
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 512;
/// Stop sequence sent to live backends: a double blank line.
pub const DEFAULT_STOP: &str = "\n\n\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Distinguishes the q samples drawn for one source.
    pub sample_index: u32,
    pub model_id: String,
}

impl GenerationParams {
    pub fn new(model_id: impl Into<String>) -> Self {
        GenerationParams {
            temperature: DEFAULT_TEMPERATURE,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            sample_index: 0,
            model_id: model_id.into(),
        }
    }

    pub fn with_sample_index(mut self, sample_index: u32) -> Self {
        self.sample_index = sample_index;
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(BackendError::InvalidParams(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(BackendError::InvalidParams(
                "max_output_tokens must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Shortest decimal form of `x` after rounding to six places, so `0.7`,
/// `0.70` and `0.7000000001` share one spelling.
fn canonical_number(x: f64) -> String {
    let rounded = (x * 1e6).round() / 1e6;
    if rounded == 0.0 {
        return "0".into();
    }
    format!("{rounded}")
}

/// Hex SHA-256 of the canonical `(prompt, params)` encoding.
///
/// The encoding is a JSON object with lexicographically sorted keys and
/// the temperature as a canonical decimal string.
pub fn request_digest(prompt: &str, params: &GenerationParams) -> String {
    // serde_json::Map is ordered by key without the preserve_order feature.
    let canonical = serde_json::json!({
        "max_output_tokens": params.max_output_tokens,
        "model_id": params.model_id,
        "prompt": prompt,
        "sample_index": params.sample_index,
        "temperature": canonical_number(params.temperature),
    });
    sha256_hex(canonical.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCompletion {
    pub text: String,
    pub backend_id: String,
    pub cached: bool,
    pub request_digest: String,
    /// Set when the backend stopped on the output-length limit.
    #[serde(default)]
    pub truncated: bool,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend unavailable after {attempts} attempt(s): {message}")]
    BackendUnavailable { attempts: u32, message: String },
    #[error("request rejected with status {status}: {message}")]
    Rejected { status: u16, message: String },
    #[error("replay miss: digest {digest} not in fixture")]
    ReplayMiss { digest: String },
    #[error("credentials missing: environment variable {var} is not set")]
    AuthMissing { var: String },
    #[error("duplicate request digest {0}")]
    DuplicateDigest(String),
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("invalid fixture: {0}")]
    InvalidFixture(String),
    #[error("i/o failure: {0}")]
    IoFailure(String),
    #[error("request {index} failed: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<BackendError>,
    },
}

impl From<std::io::Error> for BackendError {
    fn from(e: std::io::Error) -> Self {
        BackendError::IoFailure(e.to_string())
    }
}

/// A source of completions.
pub trait CompletionBackend: Send + Sync {
    fn backend_id(&self) -> &str;

    fn complete(
        &self,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<RawCompletion, BackendError>;
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for Box<B> {
    fn backend_id(&self) -> &str {
        (**self).backend_id()
    }

    fn complete(
        &self,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<RawCompletion, BackendError> {
        (**self).complete(prompt, params)
    }
}
