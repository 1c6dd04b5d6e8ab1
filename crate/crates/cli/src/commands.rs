//! Implementations of the CLI subcommands.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use billscreen_core::config::{PipelineConfig, ProviderKind};
use billscreen_core::corpus::{self, Corpus, PairKey};
use billscreen_core::drafter::{self, DraftOptions, Variant};
use billscreen_core::evalbench::{self, EvalReport};
use billscreen_core::llmgate::{
    build_stack, CompletionProvider, HttpProvider, ScriptedProvider, Telemetry,
};
use billscreen_core::promptkit::TemplateStore;
use billscreen_core::screener::{self, RunError, RunStore, ScreenOptions, ScreeningRun};

use crate::CliError;

pub fn ingest(config: &PipelineConfig) -> Result<(), CliError> {
    let corpus = load_corpus(config)?;
    println!("bills:     {}", corpus.bills.len());
    println!("companies: {}", corpus.companies.len());
    println!(
        "labels:    {} (positive fraction {:.3})",
        corpus.labels.len(),
        corpus.positive_fraction()
    );
    Ok(())
}

pub fn import(input: &Path, out_dir: &Path) -> Result<(), CliError> {
    let corpus = corpus::import_combined(input)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out_dir.display())))?;
    corpus::write_bills(&out_dir.join("bills.csv"), &corpus.bills)?;
    corpus::write_companies(&out_dir.join("companies.csv"), &corpus.companies)?;
    corpus::write_labels(&out_dir.join("labels.csv"), &corpus.labels)?;
    println!(
        "imported {} bills, {} companies, {} labels into {}",
        corpus.bills.len(),
        corpus.companies.len(),
        corpus.labels.len(),
        out_dir.display()
    );
    Ok(())
}

fn load_corpus(config: &PipelineConfig) -> Result<Corpus, CliError> {
    Ok(Corpus::load(
        &config.dataset.bills,
        &config.dataset.companies,
        &config.dataset.labels,
    )?)
}

/// Build the provider stack: cache -> retry -> throttle -> base.
fn provider_stack(
    config: &PipelineConfig,
    mock_override: Option<bool>,
    script_override: Option<PathBuf>,
) -> Result<(Arc<dyn CompletionProvider>, Arc<Telemetry>), CliError> {
    let use_mock = mock_override.unwrap_or(config.provider.kind == ProviderKind::Mock);
    let base: Arc<dyn CompletionProvider> = if use_mock {
        let script = script_override
            .or_else(|| config.provider.script.clone())
            .ok_or_else(|| {
                CliError::Provider(
                    "mock provider needs a script file (--script or provider.script)".into(),
                )
            })?;
        Arc::new(ScriptedProvider::from_file(&script)?)
    } else {
        Arc::new(HttpProvider::new(
            config.provider.endpoint.clone(),
            PipelineConfig::api_key_from_env(),
            Duration::from_secs(config.provider.http_timeout_secs),
        )?)
    };

    std::fs::create_dir_all(&config.run.cache_dir).map_err(|e| {
        CliError::Data(format!(
            "cannot create cache dir {}: {e}",
            config.run.cache_dir.display()
        ))
    })?;
    let cache_path = config.run.cache_dir.join("completions.jsonl");
    Ok(build_stack(
        base,
        &config.provider,
        Some(cache_path),
        config.sampling.seed,
    ))
}

pub struct ScreenArgs {
    /// Some(true) forces mock, Some(false) forces http, None uses config.
    pub provider: Option<bool>,
    pub script: Option<PathBuf>,
    pub resume: Option<String>,
    pub run_id: Option<String>,
    pub cross_product: bool,
}

pub fn screen(config: &PipelineConfig, args: ScreenArgs) -> Result<(), CliError> {
    let corpus = load_corpus(config)?;
    let pairs: Vec<PairKey> = if args.cross_product {
        corpus.cross_product_keys()
    } else {
        corpus.labeled_pair_keys()
    };

    let run_id = match (&args.resume, &args.run_id) {
        (Some(id), _) => id.clone(),
        (None, Some(id)) => id.clone(),
        (None, None) => screener::generate_run_id(),
    };
    let store = RunStore::new(&config.run.runs_dir, &run_id);
    if args.resume.is_some() && !store.exists() {
        return Err(RunError::NotFound {
            run_id,
            dir: config.run.runs_dir.display().to_string(),
        }
        .into());
    }

    let (provider, telemetry) = provider_stack(config, args.provider, args.script)?;
    let templates = TemplateStore::builtin();
    let options = ScreenOptions::from_config(config)?;

    let run = screener::screen_batch(
        &run_id, &pairs, &corpus, &provider, &templates, &options, &store,
    )?;

    let summary = run.summary();
    let snap = telemetry.snapshot();
    println!("run_id: {run_id}");
    println!(
        "pairs: {} total, {} ok, {} failed (yes {} / no {})",
        summary.total, summary.ok, summary.failed, summary.yes, summary.no
    );
    if !summary.failure_classes.is_empty() {
        let classes: Vec<String> = summary
            .failure_classes
            .iter()
            .map(|(class, count)| format!("{class}={count}"))
            .collect();
        println!("failures: {}", classes.join(", "));
    }
    println!(
        "cache: {} hits / {} lookups ({:.1}% hit rate)",
        snap.cache_hits,
        snap.cache_hits + snap.cache_misses,
        snap.cache_hit_rate() * 100.0
    );
    println!(
        "tokens: {} prompt + {} completion = {} total across {} provider calls ({} retries)",
        snap.prompt_tokens,
        snap.completion_tokens,
        snap.total_tokens(),
        snap.provider_calls,
        snap.retries
    );
    println!("run file: {}", store.path().display());
    Ok(())
}

fn load_run(config: &PipelineConfig, run_id: &str) -> Result<ScreeningRun, CliError> {
    let store = RunStore::new(&config.run.runs_dir, run_id);
    match store.load()? {
        Some((header, mut records)) => {
            records.sort_by_key(|r| r.key());
            Ok(ScreeningRun { header, records })
        }
        None => Err(RunError::NotFound {
            run_id: run_id.to_string(),
            dir: config.run.runs_dir.display().to_string(),
        }
        .into()),
    }
}

pub fn draft(
    config: &PipelineConfig,
    run_id: &str,
    variant: Variant,
    mock_override: Option<bool>,
    script: Option<PathBuf>,
) -> Result<(), CliError> {
    let corpus = load_corpus(config)?;
    let run = load_run(config, run_id)?;
    let (provider, _telemetry) = provider_stack(config, mock_override, script)?;
    let templates = TemplateStore::builtin();
    let options = DraftOptions::from_config(config)?;

    let batch = drafter::draft_batch(
        &run,
        &corpus,
        variant,
        &provider,
        &templates,
        &options,
        &config.run.letters_dir,
    )?;
    println!(
        "letters: {} written, {} failed (variant {variant})",
        batch.drafts.len(),
        batch.failures.len()
    );
    for failure in &batch.failures {
        println!(
            "  failed: ({}, {}): {}",
            failure.bill_id, failure.company_id, failure.error
        );
    }
    println!("manifest: {}", batch.manifest_path.display());
    Ok(())
}

fn build_report(config: &PipelineConfig, run: &ScreeningRun) -> Result<EvalReport, CliError> {
    let corpus = load_corpus(config)?;
    let predictions = run.to_prediction_set();
    Ok(evalbench::evaluate(
        &predictions,
        &corpus.labels,
        &config.eval.thresholds,
        &config.eval.calibration_edges,
    )?)
}

fn write_report_files(
    config: &PipelineConfig,
    stem: &str,
    json: &impl serde::Serialize,
    text: &str,
) -> Result<PathBuf, CliError> {
    let dir = &config.run.runs_dir;
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    let json_path = dir.join(format!("{stem}.json"));
    let text_path = dir.join(format!("{stem}.txt"));
    let body = serde_json::to_string_pretty(json)
        .map_err(|e| CliError::Data(format!("cannot serialize report: {e}")))?;
    std::fs::write(&json_path, body)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", json_path.display())))?;
    std::fs::write(&text_path, text)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", text_path.display())))?;
    Ok(text_path)
}

pub fn eval(config: &PipelineConfig, run_id: &str) -> Result<PathBuf, CliError> {
    let run = load_run(config, run_id)?;
    let report = build_report(config, &run)?;
    let text = report.to_text();
    let path = write_report_files(config, &format!("{run_id}.report"), &report, &text)?;
    print!("{text}");
    println!("report: {}", path.display());
    Ok(path)
}

pub fn compare(config: &PipelineConfig, run_a: &str, run_b: &str) -> Result<(), CliError> {
    let a = build_report(config, &load_run(config, run_a)?)?;
    let b = build_report(config, &load_run(config, run_b)?)?;
    let comparison = evalbench::compare_models(&a, &b, config.eval.low_retention_fraction)?;
    let text = comparison.to_text();
    let path = write_report_files(
        config,
        &format!("compare_{run_a}__{run_b}"),
        &comparison,
        &text,
    )?;
    print!("{text}");
    println!("comparison: {}", path.display());
    Ok(())
}
