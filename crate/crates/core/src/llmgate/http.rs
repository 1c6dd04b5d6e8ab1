//! Wire provider speaking an OpenAI-style completions protocol.
//!
//! One POST per completion to a configurable URL; the credential comes from
//! the environment (`LLM_API_KEY`), never from the config file. Non-success
//! statuses are classified so the retry layer can distinguish transient
//! failures (429, 5xx, network) from permanent ones (auth, bad request).

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{CompletionProvider, CompletionRequest, CompletionResponse, ProviderError};

#[derive(Debug, Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    max_tokens: u32,
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    stop: Option<&'a [String]>,
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    choices: Option<Vec<WireChoice>>,
    usage: Option<WireUsage>,
}

#[derive(Debug, Deserialize)]
struct WireChoice {
    text: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

pub struct HttpProvider {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Network(format!("cannot build HTTP client: {e}")))?;
        Ok(Self {
            endpoint: endpoint.into(),
            api_key,
            client,
        })
    }

    fn classify_status(status: u16, body: String) -> ProviderError {
        match status {
            401 | 403 => ProviderError::Auth(body),
            429 => ProviderError::RateLimited(body),
            500..=599 => ProviderError::Server {
                status,
                message: body,
            },
            _ => ProviderError::BadRequest {
                status,
                message: body,
            },
        }
    }
}

impl CompletionProvider for HttpProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        request.validate()?;
        let body = WireRequest {
            model: &request.model_id,
            prompt: &request.prompt,
            max_tokens: request.max_completion_tokens,
            temperature: request.temperature,
            stop: request.stop_sequences.as_deref(),
        };

        let started = Instant::now();
        let mut builder = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .map_err(|e| ProviderError::Network(e.to_string()))?;

        let status = response.status().as_u16();
        let text = response
            .text()
            .map_err(|e| ProviderError::Network(format!("reading response body: {e}")))?;
        if !(200..300).contains(&status) {
            let mut message = text;
            message.truncate(500);
            return Err(Self::classify_status(status, message));
        }
        let latency_ms = started.elapsed().as_millis() as u64;

        let parsed: WireResponse = serde_json::from_str(&text)
            .map_err(|e| ProviderError::ShapeViolation(format!("invalid JSON: {e}")))?;
        let choices = parsed
            .choices
            .filter(|c| !c.is_empty())
            .ok_or_else(|| ProviderError::ShapeViolation("no choices in response".into()))?;
        let completion = choices
            .into_iter()
            .next()
            .and_then(|c| c.text)
            .ok_or_else(|| ProviderError::ShapeViolation("choice has no text field".into()))?;
        let usage = parsed.usage.unwrap_or_default();

        Ok(CompletionResponse {
            text: completion,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
            provider_id: self.provider_id().to_string(),
            cached: false,
            latency_ms: Some(latency_ms),
        })
    }

    fn provider_id(&self) -> &str {
        "http"
    }
}
