//! Sponsor-letter drafting for pairs screened relevant.
//!
//! Letters are free text: the completion is kept verbatim, no parsing. A
//! letter is only ever generated for a YES assessment; NO pairs simply get no
//! letter. Drafting reuses the same fitted summary as screening by re-running
//! the summarizer with identical parameters, which resolves to identical text
//! through the cache (or any deterministic provider).

use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::corpus::{BillRecord, CompanyRecord, Corpus, PairKey};
use crate::llmgate::{CompletionProvider, CompletionRequest, ProviderError};
use crate::promptkit::{self, Answer, RelevanceAssessment, TemplateError, TemplateId, TemplateStore};
use crate::screener::{PairStatus, ScreeningRun};
use crate::textbudget::{SummarizeError, Summarizer, TokenBudget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Base,
    Aggressive,
}

impl Variant {
    pub fn template(&self) -> TemplateId {
        match self {
            Variant::Base => TemplateId::LetterBase,
            Variant::Aggressive => TemplateId::LetterAggressive,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::Aggressive => "aggressive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "base" => Some(Variant::Base),
            "aggressive" => Some(Variant::Aggressive),
            _ => None,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum DraftError {
    #[error("pair {0} was not assessed relevant; letters are only drafted for YES assessments")]
    NotRelevant(PairKey),
    #[error("summarization failed: {0}")]
    Summarize(#[from] SummarizeError),
    #[error("template error: {0}")]
    Template(#[from] TemplateError),
    #[error("provider error: {0}")]
    Provider(#[from] ProviderError),
    #[error("provider returned an empty letter")]
    EmptyCompletion,
    #[error("unknown bill id `{0}` in run")]
    UnknownBill(String),
    #[error("unknown company id `{0}` in run")]
    UnknownCompany(String),
    #[error("letter store {path}: {source}")]
    Store {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One generated letter plus the provenance needed to audit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LetterDraft {
    pub bill_id: String,
    pub company_id: String,
    pub variant: Variant,
    pub letter_text: String,
    pub model_id: String,
    /// SHA-256 of the rendered prompt that produced the letter.
    pub prompt_digest: String,
}

pub struct DraftOptions {
    pub model_id: String,
    /// Temperature for the summarizer, matching screening so the fitted
    /// summary is identical.
    pub screening_temperature: f64,
    pub drafting_temperature: f64,
    pub letter_max_tokens: u32,
    pub budget: TokenBudget,
}

impl DraftOptions {
    pub fn from_config(config: &PipelineConfig) -> Result<Self, crate::config::ConfigError> {
        Ok(Self {
            model_id: config.provider.model_id.clone(),
            screening_temperature: config.sampling.screening_temperature,
            drafting_temperature: config.sampling.drafting_temperature,
            letter_max_tokens: config.sampling.letter_max_tokens,
            budget: config.budget.to_token_budget()?,
        })
    }
}

fn render_and_complete(
    bill: &BillRecord,
    company: &CompanyRecord,
    variant: Variant,
    provider: &dyn CompletionProvider,
    templates: &TemplateStore,
    options: &DraftOptions,
) -> Result<LetterDraft, DraftError> {
    let summarizer = Summarizer::new(
        options.budget,
        &options.model_id,
        options.screening_temperature,
    );
    let fitted = summarizer.summarize_to_fit(&bill.summary_text, provider)?;
    let prompt = promptkit::render(templates, variant.template(), bill, &fitted.text, company)?;
    let prompt_digest = hex::encode(Sha256::digest(prompt.as_bytes()));

    let request = CompletionRequest::new(
        options.model_id.clone(),
        prompt,
        options.letter_max_tokens,
        options.drafting_temperature,
    )?;
    let response = provider.complete(&request)?;
    if response.text.trim().is_empty() {
        return Err(DraftError::EmptyCompletion);
    }

    Ok(LetterDraft {
        bill_id: bill.bill_id.clone(),
        company_id: company.company_id.clone(),
        variant,
        letter_text: response.text,
        model_id: options.model_id.clone(),
        prompt_digest,
    })
}

/// Draft one letter. The assessment must be YES; a NO assessment is a
/// precondition error and costs zero provider calls.
pub fn draft_letter(
    bill: &BillRecord,
    company: &CompanyRecord,
    assessment: &RelevanceAssessment,
    variant: Variant,
    provider: &dyn CompletionProvider,
    templates: &TemplateStore,
    options: &DraftOptions,
) -> Result<LetterDraft, DraftError> {
    if assessment.answer != Answer::Yes {
        return Err(DraftError::NotRelevant(PairKey::new(
            &bill.bill_id,
            &company.company_id,
        )));
    }
    render_and_complete(bill, company, variant, provider, templates, options)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DraftFailure {
    pub bill_id: String,
    pub company_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestEntry {
    bill_id: String,
    company_id: String,
    variant: Variant,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prompt_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug)]
pub struct DraftBatch {
    pub drafts: Vec<LetterDraft>,
    pub failures: Vec<DraftFailure>,
    pub manifest_path: PathBuf,
    pub out_dir: PathBuf,
}

fn sanitize_component(id: &str) -> String {
    let cleaned: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if cleaned == id {
        cleaned
    } else {
        // Suffix a short digest so distinct ids cannot collide after cleanup.
        let digest = hex::encode(Sha256::digest(id.as_bytes()));
        format!("{cleaned}-{}", &digest[..8])
    }
}

pub fn letter_file_name(key: &PairKey, variant: Variant) -> String {
    format!(
        "{}__{}__{}.txt",
        sanitize_component(&key.bill_id),
        sanitize_component(&key.company_id),
        variant
    )
}

/// Draft letters for every YES assessment in a run, in pair-key order.
/// Per-letter provider failures are recorded and skipped; store I/O is fatal.
pub fn draft_batch(
    run: &ScreeningRun,
    corpus: &Corpus,
    variant: Variant,
    provider: &dyn CompletionProvider,
    templates: &TemplateStore,
    options: &DraftOptions,
    letters_dir: &Path,
) -> Result<DraftBatch, DraftError> {
    let bills: HashMap<&str, &BillRecord> = corpus
        .bills
        .iter()
        .map(|b| (b.bill_id.as_str(), b))
        .collect();
    let companies: HashMap<&str, &CompanyRecord> = corpus
        .companies
        .iter()
        .map(|c| (c.company_id.as_str(), c))
        .collect();

    let out_dir = letters_dir.join(&run.header.run_id);
    std::fs::create_dir_all(&out_dir).map_err(|source| DraftError::Store {
        path: out_dir.display().to_string(),
        source,
    })?;
    let manifest_path = out_dir.join("manifest.jsonl");
    let mut manifest =
        std::fs::File::create(&manifest_path).map_err(|source| DraftError::Store {
            path: manifest_path.display().to_string(),
            source,
        })?;

    let mut drafts = Vec::new();
    let mut failures = Vec::new();

    // Run records are already in pair-key order.
    for record in &run.records {
        if record.status != PairStatus::Ok || record.answer != Some(Answer::Yes) {
            continue;
        }
        let key = record.key();
        let bill = bills
            .get(key.bill_id.as_str())
            .ok_or_else(|| DraftError::UnknownBill(key.bill_id.clone()))?;
        let company = companies
            .get(key.company_id.as_str())
            .ok_or_else(|| DraftError::UnknownCompany(key.company_id.clone()))?;

        let entry = match render_and_complete(bill, company, variant, provider, templates, options)
        {
            Ok(draft) => {
                let file_name = letter_file_name(&key, variant);
                let path = out_dir.join(&file_name);
                std::fs::write(&path, &draft.letter_text).map_err(|source| DraftError::Store {
                    path: path.display().to_string(),
                    source,
                })?;
                let entry = ManifestEntry {
                    bill_id: key.bill_id.clone(),
                    company_id: key.company_id.clone(),
                    variant,
                    status: "ok",
                    file: Some(file_name),
                    prompt_digest: Some(draft.prompt_digest.clone()),
                    error: None,
                };
                drafts.push(draft);
                entry
            }
            Err(e) => {
                failures.push(DraftFailure {
                    bill_id: key.bill_id.clone(),
                    company_id: key.company_id.clone(),
                    error: e.to_string(),
                });
                ManifestEntry {
                    bill_id: key.bill_id.clone(),
                    company_id: key.company_id.clone(),
                    variant,
                    status: "failed",
                    file: None,
                    prompt_digest: None,
                    error: Some(e.to_string()),
                }
            }
        };
        let line = serde_json::to_string(&entry).expect("manifest entries serialize");
        writeln!(manifest, "{line}").map_err(|source| DraftError::Store {
            path: manifest_path.display().to_string(),
            source,
        })?;
    }
    manifest.flush().map_err(|source| DraftError::Store {
        path: manifest_path.display().to_string(),
        source,
    })?;

    Ok(DraftBatch {
        drafts,
        failures,
        manifest_path,
        out_dir,
    })
}
