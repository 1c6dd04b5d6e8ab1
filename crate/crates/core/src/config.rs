//! Pipeline configuration: one TOML file shared by every command.
//!
//! Environment overrides: `LLM_API_BASE` replaces the provider endpoint and
//! `LLM_API_KEY` supplies the credential (the key is never stored in the
//! file). Every numeric field is range-checked by [`PipelineConfig::validate`]
//! before a command starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textbudget::{BudgetError, TokenBudget};

pub const ENV_API_KEY: &str = "LLM_API_KEY";
pub const ENV_API_BASE: &str = "LLM_API_BASE";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid token budget: {0}")]
    Budget(#[from] BudgetError),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub dataset: DatasetConfig,
    pub provider: ProviderConfig,
    pub budget: BudgetConfig,
    pub sampling: SamplingConfig,
    pub run: RunConfig,
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub bills: PathBuf,
    pub companies: PathBuf,
    pub labels: PathBuf,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            bills: "data/bills.csv".into(),
            companies: "data/companies.csv".into(),
            labels: "data/labels.csv".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Http,
    Mock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Full completions URL, e.g. `https://api.openai.com/v1/completions`.
    pub endpoint: String,
    /// Opaque model identifier passed through on the wire, so any
    /// protocol-compatible endpoint (including local models) can be
    /// benchmarked under the identical harness.
    pub model_id: String,
    /// Script file for the mock provider.
    pub script: Option<PathBuf>,
    /// 0 = unlimited.
    pub requests_per_minute: u32,
    /// 0 = unlimited.
    pub max_concurrent_requests: u32,
    pub http_timeout_secs: u64,
    pub retry_max_attempts: u32,
    pub retry_base_backoff_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Http,
            endpoint: "https://api.openai.com/v1/completions".into(),
            model_id: "gpt-3.5-turbo-instruct".into(),
            script: None,
            requests_per_minute: 0,
            max_concurrent_requests: 4,
            http_timeout_secs: 60,
            retry_max_attempts: 4,
            retry_base_backoff_ms: 250,
        }
    }
}

/// Token budget numbers; see [`TokenBudget`] for the invariants. The default
/// models a 4k context with room reserved for the prompt scaffold plus the
/// company description, and for the completion.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetConfig {
    pub context_limit: usize,
    pub reserved_for_prompt_scaffold: usize,
    pub reserved_for_completion: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            context_limit: 4096,
            reserved_for_prompt_scaffold: 1200,
            reserved_for_completion: 512,
        }
    }
}

impl BudgetConfig {
    pub fn to_token_budget(self) -> Result<TokenBudget, BudgetError> {
        TokenBudget::new(
            self.context_limit,
            self.reserved_for_prompt_scaffold,
            self.reserved_for_completion,
        )
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    /// Screening and evaluation run at temperature 0 by default so benchmark
    /// numbers are reproducible.
    pub screening_temperature: f64,
    /// Drafting defaults to mild sampling; letters are long-form prose and
    /// are not benchmarked numerically.
    pub drafting_temperature: f64,
    pub letter_max_tokens: u32,
    /// Seeds backoff jitter (and any other randomness) for reproducible
    /// transcripts under the mock provider.
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            screening_temperature: 0.0,
            drafting_temperature: 0.7,
            letter_max_tokens: 1024,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub cache_dir: PathBuf,
    pub runs_dir: PathBuf,
    pub letters_dir: PathBuf,
    /// Bounded worker parallelism for batch screening/drafting.
    pub max_in_flight: u32,
    /// Wall-clock ceiling per (bill, company) pair, including retries.
    pub pair_timeout_secs: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cache_dir: "cache".into(),
            runs_dir: "runs".into(),
            letters_dir: "letters".into(),
            max_in_flight: 4,
            pair_timeout_secs: 120,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Confidence thresholds for the filtered-accuracy sweep (strict >).
    pub thresholds: Vec<u32>,
    /// Calibration bucket edges; must start at 0, end at 100, strictly
    /// increasing.
    pub calibration_edges: Vec<u32>,
    /// Filtered rows retaining less than this fraction of predictions get a
    /// low-retention flag in comparisons.
    pub low_retention_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            thresholds: vec![0, 50, 80, 90, 95],
            calibration_edges: vec![0, 50, 90, 100],
            low_retention_fraction: 0.5,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config: PipelineConfig =
            toml::from_str(&raw).map_err(|source| ConfigError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        config.apply_env_overrides();
        config.validate()?;
        Ok(config)
    }

    pub fn apply_env_overrides(&mut self) {
        if let Ok(base) = std::env::var(ENV_API_BASE) {
            if !base.is_empty() {
                self.provider.endpoint = base;
            }
        }
    }

    pub fn api_key_from_env() -> Option<String> {
        std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.budget.to_token_budget()?;
        for (name, t) in [
            ("screening_temperature", self.sampling.screening_temperature),
            ("drafting_temperature", self.sampling.drafting_temperature),
        ] {
            if !(0.0..=2.0).contains(&t) {
                return Err(ConfigError::Invalid(format!("{name} {t} outside [0, 2]")));
            }
        }
        if self.sampling.letter_max_tokens < 1 {
            return Err(ConfigError::Invalid("letter_max_tokens must be >= 1".into()));
        }
        if self.provider.retry_max_attempts < 1 {
            return Err(ConfigError::Invalid("retry_max_attempts must be >= 1".into()));
        }
        if self.run.max_in_flight < 1 {
            return Err(ConfigError::Invalid("max_in_flight must be >= 1".into()));
        }
        for t in &self.eval.thresholds {
            if *t > 100 {
                return Err(ConfigError::Invalid(format!("threshold {t} outside [0, 100]")));
            }
        }
        let edges = &self.eval.calibration_edges;
        if edges.len() < 2
            || edges.first() != Some(&0)
            || edges.last() != Some(&100)
            || !edges.windows(2).all(|w| w[0] < w[1])
        {
            return Err(ConfigError::Invalid(
                "calibration_edges must be strictly increasing from 0 to 100".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.eval.low_retention_fraction) {
            return Err(ConfigError::Invalid(
                "low_retention_fraction must be in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}
