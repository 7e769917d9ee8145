//! Live completion service access with retry.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{
    request_digest, BackendError, CompletionBackend, GenerationParams, RawCompletion, DEFAULT_STOP,
};

/// Failure classes a transport can report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    /// Connection failure, timeout or a 5xx-class status. Retried.
    Transient(String),
    /// 4xx-class status. Not retried.
    Rejected { status: u16, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportReply {
    pub text: String,
    pub truncated: bool,
}

/// The wire adapter behind [`LiveBackend`].
pub trait Transport: Send + Sync {
    fn send(
        &self,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<TransportReply, TransportError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based): base, 2*base, 4*base...
    pub fn delay_before(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt.saturating_sub(1))
    }
}

pub struct LiveBackend<T> {
    transport: T,
    retry: RetryPolicy,
}

impl<T: Transport> LiveBackend<T> {
    pub fn new(transport: T, retry: RetryPolicy) -> Self {
        LiveBackend { transport, retry }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }
}

impl<T: Transport> CompletionBackend for LiveBackend<T> {
    fn backend_id(&self) -> &str {
        "live"
    }

    fn complete(
        &self,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<RawCompletion, BackendError> {
        params.validate()?;
        let digest = request_digest(prompt, params);
        let max_attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.transport.send(prompt, params) {
                Ok(reply) => {
                    return Ok(RawCompletion {
                        text: reply.text,
                        backend_id: "live".into(),
                        cached: false,
                        request_digest: digest,
                        truncated: reply.truncated,
                    })
                }
                Err(TransportError::Rejected { status, message }) => {
                    return Err(BackendError::Rejected { status, message })
                }
                Err(TransportError::Transient(message)) => {
                    if attempt >= max_attempts {
                        return Err(BackendError::BackendUnavailable {
                            attempts: attempt,
                            message,
                        });
                    }
                    let delay = self.retry.delay_before(attempt);
                    tracing::warn!(attempt, ?delay, %message, "transient backend failure, retrying");
                    std::thread::sleep(delay);
                }
            }
        }
    }
}

/// Settings for [`HttpTransport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpTransportConfig {
    /// Full URL of a text-completions endpoint.
    pub endpoint: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub stop: Vec<String>,
}

impl Default for HttpTransportConfig {
    fn default() -> Self {
        HttpTransportConfig {
            endpoint: "http://127.0.0.1:8000/v1/completions".into(),
            api_key_env: "STYLEDISTILL_API_KEY".into(),
            timeout_secs: 120,
            stop: vec![DEFAULT_STOP.into()],
        }
    }
}

/// Text-completions JSON adapter.
///
/// Request: `{model, prompt, temperature, max_tokens, stop}` with a bearer
/// token. Response: `choices[0].text`, with `finish_reason == "length"`
/// marking truncation.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    config: HttpTransportConfig,
    api_key: String,
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    temperature: f64,
    max_tokens: u32,
    stop: &'a [String],
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    text: String,
    #[serde(default)]
    finish_reason: Option<String>,
}

impl HttpTransport {
    pub fn new(config: HttpTransportConfig) -> Result<Self, BackendError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| BackendError::AuthMissing {
                var: config.api_key_env.clone(),
            })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::BackendUnavailable {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(HttpTransport {
            client,
            config,
            api_key,
        })
    }
}

impl Transport for HttpTransport {
    fn send(
        &self,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<TransportReply, TransportError> {
        let body = CompletionRequest {
            model: &params.model_id,
            prompt,
            temperature: params.temperature,
            max_tokens: params.max_output_tokens,
            stop: &self.config.stop,
        };
        let response = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        let status = response.status();
        if status.is_server_error() || status.as_u16() == 408 {
            return Err(TransportError::Transient(format!("status {status}")));
        }
        if !status.is_success() {
            let message = response.text().unwrap_or_default();
            return Err(TransportError::Rejected {
                status: status.as_u16(),
                message,
            });
        }
        let parsed: CompletionResponse = response
            .json()
            .map_err(|e| TransportError::Transient(format!("malformed response: {e}")))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| TransportError::Transient("response has no choices".into()))?;
        Ok(TransportReply {
            truncated: choice.finish_reason.as_deref() == Some("length"),
            text: choice.text,
        })
    }
}
