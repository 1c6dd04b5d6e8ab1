//! Batch relevance screening over (bill, company) pairs.
//!
//! Each pair goes through: fit the bill summary into the token budget, render
//! the relevance prompt, obtain one completion (through whatever cache/retry
//! stack the provider carries), parse the structured response. Pair-level
//! failures are classified and recorded, never fatal to the batch.
//!
//! Runs persist to `runs/<run_id>.log` as line-delimited JSON: one header
//! record with the immutable config snapshot, then one record per pair. The
//! worker pool completes pairs out of order, but records are written in
//! pair-key order, so an interrupted run always leaves a sorted prefix and
//! resuming skips exactly the persisted pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::corpus::{BillRecord, CompanyRecord, Corpus, PairKey};
use crate::evalbench::{PredictionEntry, PredictionSet};
use crate::llmgate::{CompletionProvider, CompletionRequest};
use crate::promptkit::{self, Answer, ParseWarning, TemplateId, TemplateStore};
use crate::textbudget::{Summarizer, TokenBudget};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("unknown bill id `{0}`")]
    UnknownBill(String),
    #[error("unknown company id `{0}`")]
    UnknownCompany(String),
    #[error("run store {path}: {source}")]
    Store {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("run store {path}: line {line}: {message}")]
    Corrupt {
        path: String,
        line: usize,
        message: String,
    },
    #[error("run `{run_id}` was started with a different config; refusing to resume")]
    ConfigMismatch { run_id: String },
    #[error("run `{run_id}` not found under {dir}")]
    NotFound { run_id: String, dir: String },
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
}

/// Immutable once the run starts; resuming requires an identical snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfigSnapshot {
    pub model_id: String,
    pub screening_temperature: f64,
    pub budget: TokenBudget,
    pub template_digests: BTreeMap<String, String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub run_id: String,
    pub started_at_ms: u64,
    pub config: RunConfigSnapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStatus {
    Ok,
    Failed,
}

/// One screened pair: either a parsed assessment or a classified failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub bill_id: String,
    pub company_id: String,
    pub status: PairStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer: Option<Answer>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    /// SHA-256 of the raw completion, recorded for parse failures too.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_class: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<ParseWarning>,
}

impl PairRecord {
    pub fn key(&self) -> PairKey {
        PairKey::new(&self.bill_id, &self.company_id)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum RunLine {
    Header(RunHeader),
    Pair(PairRecord),
}

/// A completed (or partially completed) screening run in memory.
#[derive(Debug, Clone)]
pub struct ScreeningRun {
    pub header: RunHeader,
    /// Sorted by (bill_id, company_id); each pair appears at most once.
    pub records: Vec<PairRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub total: usize,
    pub ok: usize,
    pub failed: usize,
    pub yes: usize,
    pub no: usize,
    pub failure_classes: BTreeMap<String, usize>,
}

impl ScreeningRun {
    pub fn summary(&self) -> RunSummary {
        let mut summary = RunSummary {
            total: self.records.len(),
            ..Default::default()
        };
        for r in &self.records {
            match r.status {
                PairStatus::Ok => {
                    summary.ok += 1;
                    match r.answer {
                        Some(Answer::Yes) => summary.yes += 1,
                        Some(Answer::No) => summary.no += 1,
                        None => {}
                    }
                }
                PairStatus::Failed => {
                    summary.failed += 1;
                    let class = r.error_class.clone().unwrap_or_else(|| "unknown".into());
                    *summary.failure_classes.entry(class).or_insert(0) += 1;
                }
            }
        }
        summary
    }

    /// Predictions for evaluation: YES/NO become booleans, failed pairs are
    /// excluded (counted, never imputed).
    pub fn to_prediction_set(&self) -> PredictionSet {
        let entries = self
            .records
            .iter()
            .filter(|r| r.status == PairStatus::Ok)
            .filter_map(|r| {
                Some(PredictionEntry {
                    key: r.key(),
                    predicted: r.answer?.as_bool(),
                    confidence: r.confidence?,
                })
            })
            .collect();
        let excluded = self
            .records
            .iter()
            .filter(|r| r.status == PairStatus::Failed)
            .count();
        PredictionSet::new(self.header.config.model_id.clone(), entries, excluded)
            .expect("run records have unique keys and valid confidences")
    }
}

/// Append-only JSONL store for one run.
pub struct RunStore {
    path: PathBuf,
}

impl RunStore {
    pub fn new(runs_dir: &Path, run_id: &str) -> Self {
        Self {
            path: runs_dir.join(format!("{run_id}.log")),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn exists(&self) -> bool {
        self.path.exists()
    }

    fn store_err(&self, source: std::io::Error) -> RunError {
        RunError::Store {
            path: self.path.display().to_string(),
            source,
        }
    }

    /// Read the header and all persisted pair records, if the file exists.
    pub fn load(&self) -> Result<Option<(RunHeader, Vec<PairRecord>)>, RunError> {
        let file = match std::fs::File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(self.store_err(e)),
        };
        let mut header = None;
        let mut records = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| self.store_err(e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: RunLine =
                serde_json::from_str(&line).map_err(|e| RunError::Corrupt {
                    path: self.path.display().to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            match parsed {
                RunLine::Header(h) => header = Some(h),
                RunLine::Pair(p) => records.push(p),
            }
        }
        match header {
            Some(h) => Ok(Some((h, records))),
            None => Err(RunError::Corrupt {
                path: self.path.display().to_string(),
                line: 1,
                message: "missing header record".into(),
            }),
        }
    }

    fn append(&self, line: &RunLine) -> Result<(), RunError> {
        if let Some(parent) = self.path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| self.store_err(e))?;
        }
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| self.store_err(e))?;
        let json = serde_json::to_string(line).expect("run lines serialize");
        writeln!(file, "{json}").map_err(|e| self.store_err(e))?;
        file.flush().map_err(|e| self.store_err(e))
    }
}

/// Everything screen_pair needs besides the records themselves.
pub struct ScreenOptions {
    pub model_id: String,
    pub temperature: f64,
    pub budget: TokenBudget,
    pub max_in_flight: usize,
    pub pair_timeout: Duration,
    pub seed: u64,
}

impl ScreenOptions {
    pub fn from_config(config: &PipelineConfig) -> Result<Self, RunError> {
        Ok(Self {
            model_id: config.provider.model_id.clone(),
            temperature: config.sampling.screening_temperature,
            budget: config.budget.to_token_budget().map_err(crate::config::ConfigError::from)?,
            max_in_flight: config.run.max_in_flight as usize,
            pair_timeout: Duration::from_secs(config.run.pair_timeout_secs),
            seed: config.sampling.seed,
        })
    }

    pub fn snapshot(&self, templates: &TemplateStore) -> RunConfigSnapshot {
        RunConfigSnapshot {
            model_id: self.model_id.clone(),
            screening_temperature: self.temperature,
            budget: self.budget,
            template_digests: templates.digests(),
            seed: self.seed,
        }
    }
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn failure(
    key: &PairKey,
    class: impl Into<String>,
    message: impl std::fmt::Display,
    raw_digest: Option<String>,
) -> PairRecord {
    PairRecord {
        bill_id: key.bill_id.clone(),
        company_id: key.company_id.clone(),
        status: PairStatus::Failed,
        answer: None,
        confidence: None,
        explanation: None,
        raw_digest,
        error_class: Some(class.into()),
        error: Some(message.to_string()),
        warnings: Vec::new(),
    }
}

/// Screen one pair end to end. Never returns an error: every failure mode is
/// classified into the record so a batch can keep going.
pub fn screen_pair(
    bill: &BillRecord,
    company: &CompanyRecord,
    provider: &dyn CompletionProvider,
    templates: &TemplateStore,
    options: &ScreenOptions,
) -> PairRecord {
    let key = PairKey::new(&bill.bill_id, &company.company_id);
    let deadline = Instant::now() + options.pair_timeout;

    let summarizer = Summarizer::new(options.budget, &options.model_id, options.temperature);
    let fitted = match summarizer.summarize_to_fit(&bill.summary_text, provider) {
        Ok(f) => f,
        Err(e) => return failure(&key, "summarization", e, None),
    };
    if Instant::now() > deadline {
        return failure(&key, "timeout", "pair timeout exceeded after summarization", None);
    }

    let prompt = match promptkit::render(templates, TemplateId::Relevance, bill, &fitted.text, company)
    {
        Ok(p) => p,
        Err(e) => return failure(&key, "render", e, None),
    };

    let request = match CompletionRequest::new(
        options.model_id.clone(),
        prompt,
        options.budget.reserved_for_completion as u32,
        options.temperature,
    ) {
        Ok(r) => r,
        Err(e) => return failure(&key, "render", e, None),
    };

    let response = match provider.complete(&request) {
        Ok(r) => r,
        Err(e) => return failure(&key, format!("provider:{}", e.class()), e, None),
    };
    if Instant::now() > deadline {
        return failure(&key, "timeout", "pair timeout exceeded after completion", None);
    }

    let raw_digest = sha256_hex(&response.text);
    match promptkit::parse_assessment(
        &response.text,
        &bill.bill_id,
        &company.company_id,
        &options.model_id,
    ) {
        Ok(assessment) => PairRecord {
            bill_id: bill.bill_id.clone(),
            company_id: company.company_id.clone(),
            status: PairStatus::Ok,
            answer: Some(assessment.answer),
            confidence: Some(assessment.confidence),
            explanation: Some(assessment.explanation),
            raw_digest: Some(raw_digest),
            error_class: None,
            error: None,
            warnings: assessment.warnings,
        },
        Err(e) => failure(&key, format!("parse:{}", e.class()), e, Some(raw_digest)),
    }
}

/// Screen a batch of pairs with bounded parallelism, persisting records in
/// pair-key order as they become writable. Resuming an interrupted run skips
/// already-persisted pairs exactly.
pub fn screen_batch(
    run_id: &str,
    pairs: &[PairKey],
    corpus: &Corpus,
    provider: &dyn CompletionProvider,
    templates: &TemplateStore,
    options: &ScreenOptions,
    store: &RunStore,
) -> Result<ScreeningRun, RunError> {
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
    for key in pairs {
        if !bills.contains_key(key.bill_id.as_str()) {
            return Err(RunError::UnknownBill(key.bill_id.clone()));
        }
        if !companies.contains_key(key.company_id.as_str()) {
            return Err(RunError::UnknownCompany(key.company_id.clone()));
        }
    }

    let sorted: BTreeSet<PairKey> = pairs.iter().cloned().collect();
    let snapshot = options.snapshot(templates);

    let (header, mut existing) = match store.load()? {
        Some((header, records)) => {
            if header.config != snapshot {
                return Err(RunError::ConfigMismatch {
                    run_id: run_id.to_string(),
                });
            }
            (header, records)
        }
        None => {
            let header = RunHeader {
                run_id: run_id.to_string(),
                started_at_ms: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_millis() as u64)
                    .unwrap_or(0),
                config: snapshot,
            };
            store.append(&RunLine::Header(header.clone()))?;
            (header, Vec::new())
        }
    };

    let done: BTreeSet<PairKey> = existing.iter().map(PairRecord::key).collect();
    let todo: Vec<PairKey> = sorted.iter().filter(|k| !done.contains(k)).cloned().collect();

    let new_records = run_workers(&todo, &bills, &companies, provider, templates, options, store)?;
    existing.extend(new_records);
    existing.sort_by_key(PairRecord::key);

    Ok(ScreeningRun {
        header,
        records: existing,
    })
}

fn run_workers(
    todo: &[PairKey],
    bills: &HashMap<&str, &BillRecord>,
    companies: &HashMap<&str, &CompanyRecord>,
    provider: &dyn CompletionProvider,
    templates: &TemplateStore,
    options: &ScreenOptions,
    store: &RunStore,
) -> Result<Vec<PairRecord>, RunError> {
    if todo.is_empty() {
        return Ok(Vec::new());
    }
    let workers = options.max_in_flight.max(1).min(todo.len());
    let next_job = AtomicUsize::new(0);
    let (sender, receiver) = mpsc::channel::<(usize, PairRecord)>();

    let mut written = Vec::with_capacity(todo.len());
    let mut result: Result<(), RunError> = Ok(());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            let sender = sender.clone();
            let next_job = &next_job;
            scope.spawn(move || loop {
                let idx = next_job.fetch_add(1, Ordering::SeqCst);
                let Some(key) = todo.get(idx) else { break };
                let bill = bills[key.bill_id.as_str()];
                let company = companies[key.company_id.as_str()];
                let record = screen_pair(bill, company, provider, templates, options);
                if sender.send((idx, record)).is_err() {
                    break;
                }
            });
        }
        drop(sender);

        // Single writer: hold out-of-order results until their turn, so the
        // file is always a sorted prefix of the full run.
        let mut pending: BTreeMap<usize, PairRecord> = BTreeMap::new();
        let mut next_write = 0;
        for (idx, record) in receiver {
            pending.insert(idx, record);
            while let Some(record) = pending.remove(&next_write) {
                if let Err(e) = store.append(&RunLine::Pair(record.clone())) {
                    result = Err(e);
                    return;
                }
                written.push(record);
                next_write += 1;
            }
        }
    });

    result.map(|_| written)
}

/// Generate a timestamp-based run id; callers needing reproducible ids pass
/// their own.
pub fn generate_run_id() -> String {
    let ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    format!("run-{ms}")
}
