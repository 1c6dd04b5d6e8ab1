//! Retry layer: exponential backoff with seeded jitter for transient
//! failures. Auth and malformed-request errors fail immediately.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CompletionProvider, CompletionRequest, CompletionResponse, ProviderError, Telemetry};

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    /// Total attempts including the first; must be >= 1.
    pub max_attempts: u32,
    /// Base delay for the exponential schedule. Zero disables sleeping,
    /// which keeps scripted tests instant.
    pub base_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            base_backoff_ms: 250,
        }
    }
}

pub struct RetryProvider<P> {
    inner: P,
    policy: RetryPolicy,
    rng: Mutex<ChaCha8Rng>,
    telemetry: Arc<Telemetry>,
}

impl<P: CompletionProvider> RetryProvider<P> {
    pub fn seeded(inner: P, policy: RetryPolicy, seed: u64, telemetry: Arc<Telemetry>) -> Self {
        assert!(policy.max_attempts >= 1, "max_attempts must be >= 1");
        Self {
            inner,
            policy,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            telemetry,
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let base = self.policy.base_backoff_ms;
        if base == 0 {
            return Duration::ZERO;
        }
        let exp = base.saturating_mul(1u64 << attempt.min(16));
        let jitter = self.rng.lock().unwrap().gen_range(0..=base);
        Duration::from_millis(exp.saturating_add(jitter))
    }
}

impl<P: CompletionProvider> CompletionProvider for RetryProvider<P> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        let mut attempt = 0u32;
        loop {
            match self.inner.complete(request) {
                Ok(response) => return Ok(response),
                Err(err) if !err.is_transient() => return Err(err),
                Err(err) => {
                    attempt += 1;
                    if attempt >= self.policy.max_attempts {
                        return Err(ProviderError::Exhausted {
                            attempts: attempt,
                            last: Box::new(err),
                        });
                    }
                    self.telemetry
                        .retries
                        .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    std::thread::sleep(self.backoff(attempt - 1));
                }
            }
        }
    }

    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }
}
