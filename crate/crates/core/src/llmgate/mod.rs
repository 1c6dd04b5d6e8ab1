//! Uniform completion-provider abstraction.
//!
//! A [`CompletionProvider`] turns a [`CompletionRequest`] into a
//! [`CompletionResponse`]. The concrete providers are:
//!
//! - [`HttpProvider`] — speaks an OpenAI-style completions wire protocol
//! - [`ScriptedProvider`] — deterministic canned responses for offline runs
//!   and tests
//!
//! Cross-cutting layers wrap any provider: [`CachedProvider`] (persistent
//! response cache keyed by request digest), [`RetryProvider`] (exponential
//! backoff with seeded jitter for transient failures), and
//! [`ThrottledProvider`] (requests-per-minute limiter plus a concurrency
//! ceiling). [`build_stack`] assembles the standard layering.

mod cache;
mod http;
mod retry;
mod scripted;
mod throttle;

pub use cache::CachedProvider;
pub use http::HttpProvider;
pub use retry::{RetryPolicy, RetryProvider};
pub use scripted::{ScriptEntry, ScriptFailure, ScriptedProvider};
pub use throttle::ThrottledProvider;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::ProviderConfig;

/// One completion call: an opaque model id, the full prompt, and decoding
/// parameters. Equal requests hash to equal [`CacheKey`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_id: String,
    pub prompt: String,
    pub max_completion_tokens: u32,
    pub temperature: f64,
    pub stop_sequences: Option<Vec<String>>,
}

impl CompletionRequest {
    pub fn new(
        model_id: impl Into<String>,
        prompt: impl Into<String>,
        max_completion_tokens: u32,
        temperature: f64,
    ) -> Result<Self, ProviderError> {
        let req = Self {
            model_id: model_id.into(),
            prompt: prompt.into(),
            max_completion_tokens,
            temperature,
            stop_sequences: None,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.prompt.is_empty() {
            return Err(ProviderError::InvalidRequest("prompt is empty".into()));
        }
        if self.max_completion_tokens < 1 {
            return Err(ProviderError::InvalidRequest(
                "max_completion_tokens must be >= 1".into(),
            ));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ProviderError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Digest of every request field under SHA-256. Any field change yields a
    /// different key.
    pub fn cache_key(&self) -> CacheKey {
        let mut hasher = Sha256::new();
        let canonical = serde_json::to_string(self).expect("request is serializable");
        hasher.update(canonical.as_bytes());
        CacheKey(hex::encode(hasher.finalize()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey(pub String);

impl std::fmt::Display for CacheKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Completion text exactly as the provider returned it (no trimming at this
/// layer), plus usage accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub provider_id: String,
    pub cached: bool,
    pub latency_ms: Option<u64>,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("server error (status {status}): {message}")]
    Server { status: u16, message: String },
    #[error("request rejected (status {status}): {message}")]
    BadRequest { status: u16, message: String },
    #[error("malformed provider response: {0}")]
    ShapeViolation(String),
    #[error("no script entry matches the prompt")]
    NoScriptEntry,
    #[error("scripted failure: {0}")]
    Scripted(String),
    #[error("retries exhausted after {attempts} attempt(s): {last}")]
    Exhausted {
        attempts: u32,
        #[source]
        last: Box<ProviderError>,
    },
}

impl ProviderError {
    /// Transient errors are worth retrying; everything else fails fast.
    pub fn is_transient(&self) -> bool {
        matches!(
            self,
            ProviderError::Network(_) | ProviderError::RateLimited(_) | ProviderError::Server { .. }
        )
    }

    /// Short stable class name used in run records and failure tallies.
    pub fn class(&self) -> &'static str {
        match self {
            ProviderError::InvalidRequest(_) => "invalid_request",
            ProviderError::Network(_) => "network",
            ProviderError::Auth(_) => "auth",
            ProviderError::RateLimited(_) => "rate_limited",
            ProviderError::Server { .. } => "server",
            ProviderError::BadRequest { .. } => "bad_request",
            ProviderError::ShapeViolation(_) => "shape_violation",
            ProviderError::NoScriptEntry => "no_script_entry",
            ProviderError::Scripted(_) => "scripted",
            ProviderError::Exhausted { .. } => "exhausted",
        }
    }
}

/// A completion backend. Implementations must be safe for concurrent use by
/// multiple in-flight requests.
pub trait CompletionProvider: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError>;

    fn provider_id(&self) -> &str;
}

impl<T: CompletionProvider + ?Sized> CompletionProvider for Arc<T> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        (**self).complete(request)
    }

    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }
}

/// Shared counters for one provider stack. All layers update the same
/// instance, so a single snapshot answers "how many calls actually went out,
/// how many were retried, what did the batch cost".
#[derive(Debug, Default)]
pub struct Telemetry {
    pub provider_calls: AtomicU64,
    pub retries: AtomicU64,
    pub cache_hits: AtomicU64,
    pub cache_misses: AtomicU64,
    pub prompt_tokens: AtomicU64,
    pub completion_tokens: AtomicU64,
}

impl Telemetry {
    pub fn snapshot(&self) -> TelemetrySnapshot {
        TelemetrySnapshot {
            provider_calls: self.provider_calls.load(Ordering::Relaxed),
            retries: self.retries.load(Ordering::Relaxed),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
            cache_misses: self.cache_misses.load(Ordering::Relaxed),
            prompt_tokens: self.prompt_tokens.load(Ordering::Relaxed),
            completion_tokens: self.completion_tokens.load(Ordering::Relaxed),
        }
    }

    pub fn record_usage(&self, response: &CompletionResponse) {
        self.provider_calls.fetch_add(1, Ordering::Relaxed);
        self.prompt_tokens
            .fetch_add(response.prompt_tokens, Ordering::Relaxed);
        self.completion_tokens
            .fetch_add(response.completion_tokens, Ordering::Relaxed);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TelemetrySnapshot {
    pub provider_calls: u64,
    pub retries: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TelemetrySnapshot {
    pub fn cache_hit_rate(&self) -> f64 {
        let total = self.cache_hits + self.cache_misses;
        if total == 0 {
            0.0
        } else {
            self.cache_hits as f64 / total as f64
        }
    }

    pub fn total_tokens(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

/// Assemble the standard layering around a base provider:
/// cache -> retry -> throttle -> base. The cache sits outermost so a hit
/// costs neither a rate-limit slot nor a retry budget.
pub fn build_stack(
    base: Arc<dyn CompletionProvider>,
    config: &ProviderConfig,
    cache_path: Option<std::path::PathBuf>,
    seed: u64,
) -> (Arc<dyn CompletionProvider>, Arc<Telemetry>) {
    let telemetry = Arc::new(Telemetry::default());
    let throttled = ThrottledProvider::with_telemetry(
        base,
        config.requests_per_minute,
        config.max_concurrent_requests,
        telemetry.clone(),
    );
    let policy = RetryPolicy {
        max_attempts: config.retry_max_attempts,
        base_backoff_ms: config.retry_base_backoff_ms,
    };
    let retried = RetryProvider::seeded(Arc::new(throttled), policy, seed, telemetry.clone());
    let top: Arc<dyn CompletionProvider> = match cache_path {
        Some(path) => Arc::new(CachedProvider::open(
            Arc::new(retried),
            path,
            telemetry.clone(),
        )),
        None => Arc::new(retried),
    };
    (top, telemetry)
}
