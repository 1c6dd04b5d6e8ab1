//! Batch pipeline for screening proposed Congressional bills against company
//! business descriptions with a completion-style language model, drafting
//! sponsor letters for relevant pairs, and benchmarking prediction quality
//! against ground-truth labels.
//!
//! The pipeline stages map onto the top-level modules:
//!
//! - [`corpus`] — bill, company, and label records plus the dataset loaders.
//! - [`textbudget`] — token estimation, chunking, and recursive summarization
//!   of over-long bill summaries.
//! - [`llmgate`] — the completion-provider abstraction: HTTP wire provider,
//!   deterministic scripted provider, plus caching / retry / rate-limit layers.
//! - [`promptkit`] — template rendering and structured-response parsing.
//! - [`screener`] — resumable batch relevance screening over (bill, company)
//!   pairs.
//! - [`drafter`] — sponsor-letter generation for pairs screened relevant.
//! - [`evalbench`] — accuracy, baseline, confidence-filter sweeps, calibration
//!   buckets, confusion counts, and cross-model comparison.
//! - [`config`] — the pipeline configuration file shared by all commands.

pub mod config;
pub mod corpus;
pub mod drafter;
pub mod evalbench;
pub mod llmgate;
pub mod promptkit;
pub mod screener;
pub mod textbudget;

pub use config::PipelineConfig;
pub use corpus::{BillRecord, CompanyRecord, LabeledPair, PairKey};
pub use llmgate::{CompletionProvider, CompletionRequest, CompletionResponse};
pub use promptkit::RelevanceAssessment;
