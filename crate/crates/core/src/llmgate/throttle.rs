//! Outbound call gating: a requests-per-minute limiter and a concurrency
//! ceiling, both optional. This layer sits directly above the base provider,
//! so it is also where provider-call and token telemetry is recorded.

use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use super::{CompletionProvider, CompletionRequest, CompletionResponse, ProviderError, Telemetry};

struct Gate {
    in_flight: Mutex<u32>,
    freed: Condvar,
    ceiling: u32,
}

impl Gate {
    fn acquire(&self) {
        let mut in_flight = self.in_flight.lock().unwrap();
        while *in_flight >= self.ceiling {
            in_flight = self.freed.wait(in_flight).unwrap();
        }
        *in_flight += 1;
    }

    fn release(&self) {
        let mut in_flight = self.in_flight.lock().unwrap();
        *in_flight -= 1;
        drop(in_flight);
        self.freed.notify_one();
    }
}

pub struct ThrottledProvider<P> {
    inner: P,
    min_interval: Option<Duration>,
    next_allowed: Mutex<Option<Instant>>,
    gate: Option<Gate>,
    telemetry: Arc<Telemetry>,
}

impl<P: CompletionProvider> ThrottledProvider<P> {
    /// `requests_per_minute` and `max_concurrent` of zero mean "unlimited".
    pub fn new(inner: P, requests_per_minute: u32, max_concurrent: u32) -> Self {
        Self::with_telemetry(
            inner,
            requests_per_minute,
            max_concurrent,
            Arc::new(Telemetry::default()),
        )
    }

    pub fn with_telemetry(
        inner: P,
        requests_per_minute: u32,
        max_concurrent: u32,
        telemetry: Arc<Telemetry>,
    ) -> Self {
        let min_interval = if requests_per_minute == 0 {
            None
        } else {
            Some(Duration::from_secs_f64(60.0 / requests_per_minute as f64))
        };
        let gate = if max_concurrent == 0 {
            None
        } else {
            Some(Gate {
                in_flight: Mutex::new(0),
                freed: Condvar::new(),
                ceiling: max_concurrent,
            })
        };
        Self {
            inner,
            min_interval,
            next_allowed: Mutex::new(None),
            gate,
            telemetry,
        }
    }

    pub fn telemetry(&self) -> Arc<Telemetry> {
        self.telemetry.clone()
    }

    fn wait_for_slot(&self) {
        let Some(interval) = self.min_interval else {
            return;
        };
        // Reserve the next start slot under the lock, sleep outside it.
        let wait = {
            let mut next = self.next_allowed.lock().unwrap();
            let now = Instant::now();
            let start = match *next {
                Some(t) if t > now => t,
                _ => now,
            };
            *next = Some(start + interval);
            start.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

impl<P: CompletionProvider> CompletionProvider for ThrottledProvider<P> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        if let Some(gate) = &self.gate {
            gate.acquire();
        }
        self.wait_for_slot();
        let result = self.inner.complete(request);
        if let Some(gate) = &self.gate {
            gate.release();
        }
        if let Ok(response) = &result {
            self.telemetry.record_usage(response);
        } else {
            // Failed calls still went out.
            self.telemetry
                .provider_calls
                .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        result
    }

    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llmgate::ScriptedProvider;
    use std::sync::atomic::{AtomicU32, Ordering};

    fn request(prompt: &str) -> CompletionRequest {
        CompletionRequest::new("m", prompt, 16, 0.0).unwrap()
    }

    #[test]
    fn rpm_limiter_spaces_out_calls() {
        // 1200 rpm -> 50ms interval; 3 calls need >= 100ms total.
        let inner = ScriptedProvider::new().with_default("ok");
        let throttled = ThrottledProvider::new(inner, 1200, 0);
        let start = Instant::now();
        for i in 0..3 {
            throttled.complete(&request(&format!("p{i}"))).unwrap();
        }
        assert!(start.elapsed() >= Duration::from_millis(100));
    }

    #[test]
    fn concurrency_ceiling_is_respected() {
        struct SlowProbe {
            current: AtomicU32,
            peak: AtomicU32,
        }
        impl CompletionProvider for SlowProbe {
            fn complete(
                &self,
                request: &CompletionRequest,
            ) -> Result<CompletionResponse, ProviderError> {
                let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
                self.peak.fetch_max(now, Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(20));
                self.current.fetch_sub(1, Ordering::SeqCst);
                Ok(CompletionResponse {
                    text: request.prompt.clone(),
                    prompt_tokens: 0,
                    completion_tokens: 0,
                    provider_id: "probe".into(),
                    cached: false,
                    latency_ms: None,
                })
            }
            fn provider_id(&self) -> &str {
                "probe"
            }
        }

        let probe = Arc::new(SlowProbe {
            current: AtomicU32::new(0),
            peak: AtomicU32::new(0),
        });
        let throttled = Arc::new(ThrottledProvider::new(probe.clone(), 0, 2));

        std::thread::scope(|scope| {
            for i in 0..6 {
                let throttled = throttled.clone();
                scope.spawn(move || throttled.complete(&request(&format!("p{i}"))).unwrap());
            }
        });
        assert!(probe.peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn telemetry_counts_calls_and_tokens() {
        let telemetry = Arc::new(Telemetry::default());
        let inner = ScriptedProvider::new().with_default("12345678");
        let throttled = ThrottledProvider::with_telemetry(inner, 0, 0, telemetry.clone());
        throttled.complete(&request("abcd")).unwrap();
        let snap = telemetry.snapshot();
        assert_eq!(snap.provider_calls, 1);
        assert_eq!(snap.prompt_tokens, 1);
        assert_eq!(snap.completion_tokens, 2);
    }
}
