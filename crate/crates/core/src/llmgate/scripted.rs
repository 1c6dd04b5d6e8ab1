//! Deterministic scripted provider for offline runs and tests.
//!
//! A script is an ordered list of entries; the first entry whose needles all
//! appear in the prompt wins. Entries can inject classified failures, either
//! permanently or for the first `fail_times` calls, which is how retry and
//! failure-isolation behavior is exercised without a network.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{CompletionProvider, CompletionRequest, CompletionResponse, ProviderError};
use crate::textbudget::estimate_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptFailure {
    Network,
    RateLimited,
    Server,
    Auth,
    BadRequest,
}

impl ScriptFailure {
    fn to_error(self) -> ProviderError {
        match self {
            ScriptFailure::Network => ProviderError::Network("scripted network failure".into()),
            ScriptFailure::RateLimited => ProviderError::RateLimited("scripted 429".into()),
            ScriptFailure::Server => ProviderError::Server {
                status: 500,
                message: "scripted server failure".into(),
            },
            ScriptFailure::Auth => ProviderError::Auth("scripted auth failure".into()),
            ScriptFailure::BadRequest => ProviderError::BadRequest {
                status: 400,
                message: "scripted bad request".into(),
            },
        }
    }
}

/// One script rule. All `contains` needles must appear in the prompt for the
/// rule to match. With `fail` and no `fail_times`, every match fails; with
/// `fail_times = n`, the first n matches fail and later ones return `text`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(default)]
    pub contains: Vec<String>,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub fail: Option<ScriptFailure>,
    #[serde(default)]
    pub fail_times: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScriptFile {
    #[serde(default)]
    entries: Vec<ScriptEntry>,
    #[serde(default)]
    default: Option<String>,
}

struct CompiledEntry {
    contains: Vec<String>,
    text: Option<String>,
    fail: Option<ScriptFailure>,
    fails_remaining: Option<AtomicU64>,
}

/// Fully deterministic provider: the same prompts yield byte-identical
/// transcripts across runs.
pub struct ScriptedProvider {
    entries: Vec<CompiledEntry>,
    default_response: Option<String>,
    calls: AtomicU64,
}

impl ScriptedProvider {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
            default_response: None,
            calls: AtomicU64::new(0),
        }
    }

    pub fn from_entries(entries: Vec<ScriptEntry>, default: Option<String>) -> Self {
        let mut provider = Self::new();
        provider.default_response = default;
        for e in entries {
            provider.push(e);
        }
        provider
    }

    /// Load a script from a JSON file:
    /// `{"entries": [{"contains": ["..."], "text": "..."}], "default": "..."}`.
    pub fn from_file(path: &Path) -> Result<Self, ProviderError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Scripted(format!("cannot read {}: {e}", path.display())))?;
        let file: ScriptFile = serde_json::from_str(&raw)
            .map_err(|e| ProviderError::Scripted(format!("bad script {}: {e}", path.display())))?;
        Ok(Self::from_entries(file.entries, file.default))
    }

    pub fn push(&mut self, entry: ScriptEntry) {
        self.entries.push(CompiledEntry {
            contains: entry.contains,
            text: entry.text,
            fail: entry.fail,
            fails_remaining: entry.fail_times.map(AtomicU64::new),
        });
    }

    /// Respond with `text` whenever the prompt contains `needle`.
    pub fn respond(mut self, needle: impl Into<String>, text: impl Into<String>) -> Self {
        self.push(ScriptEntry {
            contains: vec![needle.into()],
            text: Some(text.into()),
            fail: None,
            fail_times: None,
        });
        self
    }

    /// Fail with `failure` whenever the prompt contains `needle`.
    pub fn fail_on(mut self, needle: impl Into<String>, failure: ScriptFailure) -> Self {
        self.push(ScriptEntry {
            contains: vec![needle.into()],
            text: None,
            fail: Some(failure),
            fail_times: None,
        });
        self
    }

    /// Fail `times` times on prompts containing `needle`, then return `text`.
    pub fn fail_then_respond(
        mut self,
        needle: impl Into<String>,
        failure: ScriptFailure,
        times: u64,
        text: impl Into<String>,
    ) -> Self {
        self.push(ScriptEntry {
            contains: vec![needle.into()],
            text: Some(text.into()),
            fail: Some(failure),
            fail_times: Some(times),
        });
        self
    }

    /// Respond with `text` for any prompt no entry matched.
    pub fn with_default(mut self, text: impl Into<String>) -> Self {
        self.default_response = Some(text.into());
        self
    }

    /// Number of completions served (including failures).
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    fn respond_with(&self, request: &CompletionRequest, text: &str) -> CompletionResponse {
        CompletionResponse {
            text: text.to_string(),
            prompt_tokens: estimate_tokens(&request.prompt) as u64,
            completion_tokens: estimate_tokens(text) as u64,
            provider_id: self.provider_id().to_string(),
            cached: false,
            latency_ms: None,
        }
    }
}

impl Default for ScriptedProvider {
    fn default() -> Self {
        Self::new()
    }
}

impl CompletionProvider for ScriptedProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        request.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);

        for entry in &self.entries {
            if !entry.contains.iter().all(|n| request.prompt.contains(n)) {
                continue;
            }
            if let Some(failure) = entry.fail {
                match &entry.fails_remaining {
                    None => return Err(failure.to_error()),
                    Some(remaining) => {
                        // Saturating decrement: fail while budget remains.
                        let prev = remaining
                            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |v| {
                                v.checked_sub(1)
                            })
                            .unwrap_or(0);
                        if prev > 0 {
                            return Err(failure.to_error());
                        }
                    }
                }
            }
            if let Some(text) = &entry.text {
                return Ok(self.respond_with(request, text));
            }
            return Err(ProviderError::NoScriptEntry);
        }

        match &self.default_response {
            Some(text) => Ok(self.respond_with(request, text)),
            None => Err(ProviderError::NoScriptEntry),
        }
    }

    fn provider_id(&self) -> &str {
        "scripted"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(prompt: &str) -> CompletionRequest {
        CompletionRequest::new("m", prompt, 16, 0.0).unwrap()
    }

    #[test]
    fn scripted_echo_is_verbatim() {
        let provider = ScriptedProvider::new()
            .respond("P", "ANSWER: NO. EXPLANATION: n/a CONFIDENCE: 80");
        let response = provider.complete(&request("prompt with P inside")).unwrap();
        assert_eq!(response.text, "ANSWER: NO. EXPLANATION: n/a CONFIDENCE: 80");
        assert_eq!(provider.calls(), 1);
    }

    #[test]
    fn first_matching_entry_wins() {
        let provider = ScriptedProvider::new()
            .respond("alpha", "first")
            .respond("alpha", "second");
        assert_eq!(provider.complete(&request("alpha")).unwrap().text, "first");
    }

    #[test]
    fn all_needles_must_match() {
        let mut provider = ScriptedProvider::new();
        provider.push(ScriptEntry {
            contains: vec!["alpha".into(), "beta".into()],
            text: Some("both".into()),
            fail: None,
            fail_times: None,
        });
        assert!(provider.complete(&request("only alpha")).is_err());
        assert_eq!(
            provider.complete(&request("alpha and beta")).unwrap().text,
            "both"
        );
    }

    #[test]
    fn unmatched_prompt_without_default_errors() {
        let provider = ScriptedProvider::new();
        assert!(matches!(
            provider.complete(&request("anything")).unwrap_err(),
            ProviderError::NoScriptEntry
        ));
    }

    #[test]
    fn fail_times_then_succeeds() {
        let provider = ScriptedProvider::new().fail_then_respond(
            "q",
            ScriptFailure::RateLimited,
            2,
            "ok",
        );
        assert!(provider.complete(&request("q")).is_err());
        assert!(provider.complete(&request("q")).is_err());
        assert_eq!(provider.complete(&request("q")).unwrap().text, "ok");
        assert_eq!(provider.calls(), 3);
    }

    #[test]
    fn script_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("script.json");
        std::fs::write(
            &path,
            r#"{"entries":[{"contains":["bill A"],"text":"YES"}],"default":"NO"}"#,
        )
        .unwrap();
        let provider = ScriptedProvider::from_file(&path).unwrap();
        assert_eq!(provider.complete(&request("about bill A")).unwrap().text, "YES");
        assert_eq!(provider.complete(&request("other")).unwrap().text, "NO");
    }
}
