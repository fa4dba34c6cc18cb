//! Shared plumbing for remote model services: the error type, bounded
//! retries, a request-rate limiter and the JSON-over-HTTP wire contract.
//!
//! Every provider role (transcribe, describe, embed, generate, judge,
//! sentiment) speaks the same shape: `POST <endpoint>` with a JSON body whose
//! `model` names the backend model, answered by a JSON object. Chat-style
//! roles send `messages` and read back a single `text` field.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("request timed out")]
    Timeout,
    #[error("provider refused: {0}")]
    Refused(String),
    #[error("http status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("provider unavailable: {0}")]
    Unavailable(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        match self {
            ProviderError::Timeout | ProviderError::Refused(_) | ProviderError::Unavailable(_) => true,
            ProviderError::Malformed(_) => true,
            ProviderError::Http { status, .. } => *status == 429 || *status >= 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Attempts after the first one.
    pub max_retries: u32,
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 2,
            backoff_ms: 0,
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self {
            max_retries: 0,
            backoff_ms: 0,
        }
    }

    /// Run `op` until it succeeds, fails with a non-retryable error, or the
    /// retry budget is spent. Returns the result and the retries used.
    pub fn run<T>(&self, mut op: impl FnMut(u32) -> Result<T, ProviderError>) -> (Result<T, ProviderError>, u32) {
        let mut attempt = 0;
        loop {
            match op(attempt) {
                Ok(v) => return (Ok(v), attempt),
                Err(e) if e.is_retryable() && attempt < self.max_retries => {
                    if self.backoff_ms > 0 {
                        std::thread::sleep(Duration::from_millis(self.backoff_ms << attempt.min(6)));
                    }
                    attempt += 1;
                }
                Err(e) => return (Err(e), attempt),
            }
        }
    }
}

/// Spaces requests at least `1 / rate` apart across all threads.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Option<Duration>,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_second(rate: Option<f64>) -> Self {
        let interval = rate.filter(|r| *r > 0.0).map(|r| Duration::from_secs_f64(1.0 / r));
        Self {
            interval,
            next: Mutex::new(None),
        }
    }

    pub fn unlimited() -> Self {
        Self::per_second(None)
    }

    pub fn acquire(&self) {
        let Some(interval) = self.interval else {
            return;
        };
        let wait = {
            let mut next = self.next.lock().unwrap_or_else(|p| p.into_inner());
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + interval);
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

/// One part of a chat message: text or a reference to an image on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContentPart {
    Text { text: String },
    Image { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: Vec<ContentPart>,
}

impl ChatMessage {
    pub fn text(role: &str, text: impl Into<String>) -> Self {
        Self {
            role: role.to_string(),
            content: vec![ContentPart::Text { text: text.into() }],
        }
    }
}

/// The request body of every chat-style provider. Image parts carry paths
/// relative to the workdir; the HTTP client inlines their bytes on send.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    /// SHA-256 of the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        fingerprint_json(self)
    }
}

#[derive(Debug, Clone, Deserialize)]
struct TextResponse {
    text: String,
}

pub fn fingerprint_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable value");
    sha256_hex(&bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Connection settings for one HTTP-backed provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpEndpoint {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding a bearer token, if any.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: u64,
}

fn default_timeout_s() -> u64 {
    60
}

/// Blocking JSON client shared by the HTTP providers.
pub struct HttpJsonClient {
    endpoint: HttpEndpoint,
    client: reqwest::blocking::Client,
    limiter: RateLimiter,
    /// Directory image paths in chat requests are resolved against.
    asset_root: Option<std::path::PathBuf>,
}

impl HttpJsonClient {
    pub fn new(endpoint: HttpEndpoint, rate_per_s: Option<f64>) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(endpoint.timeout_s))
            .build()
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        Ok(Self {
            endpoint,
            client,
            limiter: RateLimiter::per_second(rate_per_s),
            asset_root: None,
        })
    }

    pub fn with_asset_root(mut self, root: impl Into<std::path::PathBuf>) -> Self {
        self.asset_root = Some(root.into());
        self
    }

    pub fn model(&self) -> &str {
        &self.endpoint.model
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint.endpoint
    }

    pub fn post_json<B: Serialize, R: for<'de> Deserialize<'de>>(&self, body: &B) -> Result<R, ProviderError> {
        self.limiter.acquire();
        let mut req = self.client.post(&self.endpoint.endpoint).json(body);
        if let Some(var) = &self.endpoint.api_key_env {
            if let Ok(key) = std::env::var(var) {
                req = req.bearer_auth(key);
            }
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Unavailable(e.to_string())
            }
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        if !status.is_success() {
            return Err(ProviderError::Http {
                status: status.as_u16(),
                body: text,
            });
        }
        serde_json::from_str(&text).map_err(|e| ProviderError::Malformed(format!("{e}: {text}")))
    }

    /// Send a chat request, inlining image parts as base64 data.
    pub fn chat(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        use base64::Engine as _;
        let mut body = serde_json::to_value(request).map_err(|e| ProviderError::Malformed(e.to_string()))?;
        if let Some(messages) = body.get_mut("messages").and_then(|m| m.as_array_mut()) {
            for part in messages
                .iter_mut()
                .filter_map(|m| m.get_mut("content").and_then(|c| c.as_array_mut()))
                .flatten()
            {
                if part.get("type").and_then(|t| t.as_str()) != Some("image") {
                    continue;
                }
                let Some(rel) = part.get("path").and_then(|p| p.as_str()).map(str::to_owned) else {
                    continue;
                };
                let path = match &self.asset_root {
                    Some(root) => root.join(&rel),
                    None => rel.clone().into(),
                };
                if let Ok(bytes) = std::fs::read(&path) {
                    part["data_base64"] = base64::engine::general_purpose::STANDARD.encode(bytes).into();
                }
            }
        }
        let resp: TextResponse = self.post_json(&body)?;
        Ok(resp.text)
    }
}
