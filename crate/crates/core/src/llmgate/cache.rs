//! Persistent completion cache.
//!
//! One append-only JSONL record store keyed by the request digest. Responses
//! are stored verbatim together with the request and a timestamp, so the
//! cache doubles as a full prompt/response audit trail. Cache I/O failures
//! degrade to pass-through: they are logged, never fatal.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{
    CacheKey, CompletionProvider, CompletionRequest, CompletionResponse, ProviderError, Telemetry,
};

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    key: CacheKey,
    request: CompletionRequest,
    response: CompletionResponse,
    ts_ms: u64,
}

struct CacheState {
    entries: HashMap<CacheKey, CompletionResponse>,
    writer: Option<File>,
}

pub struct CachedProvider<P> {
    inner: P,
    path: PathBuf,
    state: Mutex<CacheState>,
    telemetry: Arc<Telemetry>,
}

impl<P: CompletionProvider> CachedProvider<P> {
    /// Open (or create) the record store at `path` and load existing entries.
    /// Unreadable stores or corrupt lines are logged and skipped.
    pub fn open(inner: P, path: PathBuf, telemetry: Arc<Telemetry>) -> Self {
        let mut entries = HashMap::new();
        match File::open(&path) {
            Ok(file) => {
                for (i, line) in BufReader::new(file).lines().enumerate() {
                    let line = match line {
                        Ok(l) => l,
                        Err(e) => {
                            log::warn!("cache {}: read error at line {}: {e}", path.display(), i + 1);
                            break;
                        }
                    };
                    if line.trim().is_empty() {
                        continue;
                    }
                    match serde_json::from_str::<CacheRecord>(&line) {
                        Ok(record) => {
                            entries.insert(record.key, record.response);
                        }
                        Err(e) => {
                            log::warn!(
                                "cache {}: skipping corrupt line {}: {e}",
                                path.display(),
                                i + 1
                            );
                        }
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => log::warn!("cache {}: cannot open: {e}", path.display()),
        }

        let writer = match OpenOptions::new().create(true).append(true).open(&path) {
            Ok(f) => Some(f),
            Err(e) => {
                log::warn!("cache {}: cannot open for append: {e}", path.display());
                None
            }
        };

        Self {
            inner,
            path,
            state: Mutex::new(CacheState { entries, writer }),
            telemetry,
        }
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn persist(&self, state: &mut CacheState, record: &CacheRecord) {
        let Some(writer) = state.writer.as_mut() else {
            return;
        };
        let line = match serde_json::to_string(record) {
            Ok(l) => l,
            Err(e) => {
                log::warn!("cache {}: cannot serialize record: {e}", self.path.display());
                return;
            }
        };
        if let Err(e) = writeln!(writer, "{line}").and_then(|_| writer.flush()) {
            log::warn!("cache {}: write failed, disabling: {e}", self.path.display());
            state.writer = None;
        }
    }
}

impl<P: CompletionProvider> CompletionProvider for CachedProvider<P> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        let key = request.cache_key();
        {
            let state = self.state.lock().unwrap();
            if let Some(stored) = state.entries.get(&key) {
                self.telemetry
                    .cache_hits
                    .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let mut response = stored.clone();
                response.cached = true;
                return Ok(response);
            }
        }

        self.telemetry
            .cache_misses
            .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        let response = self.inner.complete(request)?;

        let record = CacheRecord {
            key: key.clone(),
            request: request.clone(),
            response: response.clone(),
            ts_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
        };
        let mut state = self.state.lock().unwrap();
        // Two threads can race to fill the same key; the texts are identical
        // for a deterministic provider, so last write wins harmlessly.
        state.entries.insert(key, response.clone());
        self.persist(&mut state, &record);
        Ok(response)
    }

    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llmgate::ScriptedProvider;
    use std::sync::Arc;

    fn request(prompt: &str) -> CompletionRequest {
        CompletionRequest::new("m", prompt, 16, 0.0).unwrap()
    }

    #[test]
    fn second_identical_request_hits_cache() {
        let dir = tempfile::tempdir().unwrap();
        let telemetry = Arc::new(Telemetry::default());
        let inner = Arc::new(ScriptedProvider::new().with_default("reply"));
        let cached = CachedProvider::open(
            inner.clone(),
            dir.path().join("cache.jsonl"),
            telemetry.clone(),
        );

        let first = cached.complete(&request("p")).unwrap();
        let second = cached.complete(&request("p")).unwrap();
        assert_eq!(inner.calls(), 1);
        assert!(!first.cached);
        assert!(second.cached);
        assert_eq!(first.text, second.text);
        assert_eq!(telemetry.snapshot().cache_hits, 1);
        assert_eq!(telemetry.snapshot().cache_misses, 1);
    }

    #[test]
    fn different_temperature_is_a_different_key() {
        let dir = tempfile::tempdir().unwrap();
        let inner = Arc::new(ScriptedProvider::new().with_default("reply"));
        let cached = CachedProvider::open(
            inner.clone(),
            dir.path().join("cache.jsonl"),
            Arc::new(Telemetry::default()),
        );

        let mut warm = request("p");
        warm.temperature = 0.0;
        let mut hot = request("p");
        hot.temperature = 1.0;
        cached.complete(&warm).unwrap();
        cached.complete(&hot).unwrap();
        assert_eq!(inner.calls(), 2);
    }

    #[test]
    fn batch_with_duplicates_calls_provider_once_per_distinct_key() {
        let dir = tempfile::tempdir().unwrap();
        let inner = Arc::new(ScriptedProvider::new().with_default("reply"));
        let cached = CachedProvider::open(
            inner.clone(),
            dir.path().join("cache.jsonl"),
            Arc::new(Telemetry::default()),
        );

        let prompts = ["a", "b", "a", "c", "b", "d"];
        for p in prompts {
            cached.complete(&request(p)).unwrap();
        }
        assert_eq!(inner.calls(), 4);
    }

    #[test]
    fn cache_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");

        let inner = Arc::new(ScriptedProvider::new().with_default("reply"));
        let cached = CachedProvider::open(inner.clone(), path.clone(), Arc::new(Telemetry::default()));
        cached.complete(&request("p")).unwrap();
        drop(cached);

        let inner2 = Arc::new(ScriptedProvider::new().with_default("different"));
        let cached2 = CachedProvider::open(inner2.clone(), path, Arc::new(Telemetry::default()));
        let response = cached2.complete(&request("p")).unwrap();
        assert_eq!(response.text, "reply");
        assert!(response.cached);
        assert_eq!(inner2.calls(), 0);
    }

    #[test]
    fn unwritable_store_degrades_to_pass_through() {
        let dir = tempfile::tempdir().unwrap();
        let inner = Arc::new(ScriptedProvider::new().with_default("reply"));
        // A directory path cannot be opened as a file.
        let cached = CachedProvider::open(
            inner.clone(),
            dir.path().to_path_buf(),
            Arc::new(Telemetry::default()),
        );
        assert_eq!(cached.complete(&request("p")).unwrap().text, "reply");
        assert_eq!(cached.complete(&request("p")).unwrap().text, "reply");
        // In-memory map still works even though nothing persisted.
        assert_eq!(inner.calls(), 1);
    }
}
