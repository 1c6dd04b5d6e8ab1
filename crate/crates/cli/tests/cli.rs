//! CLI behavior: exit codes, offline mock runs, cache idempotency, resume,
//! drafting, evaluation, and comparison through the real binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use billscreen_core::config::PipelineConfig;
use billscreen_core::corpus::{BillRecord, CompanyRecord, Corpus, LabeledPair, PairKey};
use billscreen_core::llmgate::ScriptedProvider;
use billscreen_core::promptkit::TemplateStore;
use billscreen_core::screener::{screen_batch, RunStore, ScreenOptions};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_billscreen"))
}

fn run_ok(args: &[&str]) -> Output {
    let output = binary().args(args).output().unwrap();
    assert!(
        output.status.success(),
        "command {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn exit_code(args: &[&str]) -> (i32, String) {
    let output = binary().args(args).output().unwrap();
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stderr).to_string(),
    )
}

fn fixture_corpus() -> Corpus {
    let bills = (0..6)
        .map(|i| BillRecord {
            bill_id: format!("hr{i:03}"),
            official_title: format!("Act number {i}"),
            summary_text: format!("Summary of act {i}."),
            subjects: vec!["Commerce".into()],
            sponsor_name: None,
        })
        .collect();
    let companies = vec![CompanyRecord {
        company_id: "c1".into(),
        company_name: "Acme".into(),
        business_description: "Makes widgets.".into(),
        cik: None,
    }];
    let labels = (0..6)
        .map(|i| LabeledPair {
            bill_id: format!("hr{i:03}"),
            company_id: "c1".into(),
            relevant: i < 2,
        })
        .collect();
    Corpus {
        bills,
        companies,
        labels,
    }
}

/// Script: bills 0 and 1 are YES (matching the labels), the rest NO; any
/// letter prompt gets a fixed body.
fn write_script(dir: &Path) -> PathBuf {
    let mut entries = vec![serde_json::json!({
        "contains": ["YOUR LETTER:"],
        "text": "Dear Sponsor, please amend the bill.",
    })];
    for i in 0..6 {
        let answer = if i < 2 { "YES" } else { "NO" };
        entries.push(serde_json::json!({
            "contains": [format!("Act number {i}")],
            "text": format!("ANSWER: {answer}. EXPLANATION: verdict {i} CONFIDENCE: 9{i}"),
        }));
    }
    let path = dir.join("script.json");
    std::fs::write(&path, serde_json::json!({ "entries": entries }).to_string()).unwrap();
    path
}

fn write_fixture(dir: &Path) -> (PathBuf, Corpus) {
    let corpus = fixture_corpus();
    billscreen_core::corpus::write_bills(&dir.join("bills.csv"), &corpus.bills).unwrap();
    billscreen_core::corpus::write_companies(&dir.join("companies.csv"), &corpus.companies).unwrap();
    billscreen_core::corpus::write_labels(&dir.join("labels.csv"), &corpus.labels).unwrap();
    let script = write_script(dir);
    let config = format!(
        "[dataset]\nbills = {:?}\ncompanies = {:?}\nlabels = {:?}\n\n\
         [provider]\nkind = \"mock\"\nscript = {:?}\nretry_base_backoff_ms = 0\n\n\
         [run]\ncache_dir = {:?}\nruns_dir = {:?}\nletters_dir = {:?}\n",
        dir.join("bills.csv").display().to_string(),
        dir.join("companies.csv").display().to_string(),
        dir.join("labels.csv").display().to_string(),
        script.display().to_string(),
        dir.join("cache").display().to_string(),
        dir.join("runs").display().to_string(),
        dir.join("letters").display().to_string(),
    );
    let path = dir.join("billscreen.toml");
    std::fs::write(&path, config).unwrap();
    (path, corpus)
}

#[test]
fn ingest_prints_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (config, _) = write_fixture(dir.path());
    let output = run_ok(&["--config", config.to_str().unwrap(), "ingest"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("bills:     6"), "{stdout}");
    assert!(stdout.contains("companies: 1"), "{stdout}");
    assert!(stdout.contains("labels:    6"), "{stdout}");
    assert!(stdout.contains("0.333"), "positive fraction: {stdout}");
}

#[test]
fn missing_labels_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (config, _) = write_fixture(dir.path());
    std::fs::remove_file(dir.path().join("labels.csv")).unwrap();
    let (code, stderr) = exit_code(&["--config", config.to_str().unwrap(), "ingest"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("labels.csv"), "{stderr}");
}

#[test]
fn nonexistent_explicit_config_is_a_usage_error() {
    let (code, stderr) = exit_code(&["--config", "/nonexistent/billscreen.toml", "ingest"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("does not exist"), "{stderr}");
}

#[test]
fn invalid_config_values_are_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[budget]\ncontext_limit = 10\n").unwrap();
    let (code, stderr) = exit_code(&["--config", config.to_str().unwrap(), "ingest"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("context_limit"), "{stderr}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let (code, _) = exit_code(&["--definitely-not-a-flag"]);
    assert_eq!(code, 1);
}

#[test]
fn mock_without_script_is_a_provider_error() {
    let dir = tempfile::tempdir().unwrap();
    let (config, _) = write_fixture(dir.path());
    // Strip the script line from the config.
    let raw = std::fs::read_to_string(&config).unwrap();
    let stripped: String = raw.lines().filter(|l| !l.starts_with("script")).collect::<Vec<_>>().join("\n");
    std::fs::write(&config, stripped).unwrap();
    let (code, stderr) = exit_code(&[
        "--config",
        config.to_str().unwrap(),
        "screen",
        "--provider",
        "mock",
    ]);
    assert_eq!(code, 3);
    assert!(stderr.contains("script"), "{stderr}");
}

#[test]
fn eval_of_unknown_run_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (config, _) = write_fixture(dir.path());
    let (code, stderr) = exit_code(&["--config", config.to_str().unwrap(), "eval", "--run", "nope"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("nope"), "{stderr}");
}

#[test]
fn offline_screen_draft_eval_compare_flow() {
    let dir = tempfile::tempdir().unwrap();
    let (config, _) = write_fixture(dir.path());
    let config = config.to_str().unwrap();

    // Screen all six labeled pairs offline.
    let output = run_ok(&["--config", config, "screen", "--run-id", "flow"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("run_id: flow"), "{stdout}");
    assert!(stdout.contains("6 total, 6 ok, 0 failed (yes 2 / no 4)"), "{stdout}");
    assert!(stdout.contains("0 hits / 6 lookups"), "{stdout}");

    // Rerun under a new id: every completion is already cached.
    let output = run_ok(&["--config", config, "screen", "--run-id", "flow2"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("6 hits / 6 lookups (100.0% hit rate)"), "{stdout}");
    assert!(stdout.contains("across 0 provider calls"), "{stdout}");

    // Resuming a completed run touches nothing.
    let output = run_ok(&["--config", config, "screen", "--resume", "flow"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("0 hits / 0 lookups"), "{stdout}");

    // Draft letters for the two YES pairs.
    let output = run_ok(&["--config", config, "draft", "--run", "flow", "--variant", "aggressive"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("letters: 2 written, 0 failed"), "{stdout}");
    let letters_dir = dir.path().join("letters").join("flow");
    assert!(letters_dir.join("hr000__c1__aggressive.txt").exists());
    assert!(letters_dir.join("hr001__c1__aggressive.txt").exists());
    let body = std::fs::read_to_string(letters_dir.join("hr000__c1__aggressive.txt")).unwrap();
    assert_eq!(body, "Dear Sponsor, please amend the bill.");

    // Evaluate: the script matches the labels exactly.
    let output = run_ok(&["--config", config, "eval", "--run", "flow"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("accuracy:         1.000 (100.0%)"), "{stdout}");
    assert!(stdout.contains("baseline:         0.667 (66.7%)"), "{stdout}");
    assert!(dir.path().join("runs").join("flow.report.json").exists());
    assert!(dir.path().join("runs").join("flow.report.txt").exists());

    // Comparing a run against itself: all deltas zero.
    let output = run_ok(&["--config", config, "compare", "--run-a", "flow", "--run-b", "flow2"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("delta +0.000"), "{stdout}");
    assert!(stdout.contains("reference points:"), "{stdout}");
    assert!(stdout.contains("text-davinci-003"), "{stdout}");
}

#[test]
fn resume_completes_only_the_remaining_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let (config_path, corpus) = write_fixture(dir.path());

    // Persist the first three pairs directly, as an interrupted CLI run
    // would have: same config snapshot, same sorted order.
    let config = PipelineConfig::load(&config_path).unwrap();
    let options = ScreenOptions::from_config(&config).unwrap();
    let templates = TemplateStore::builtin();
    let provider = ScriptedProvider::from_file(config.provider.script.as_ref().unwrap()).unwrap();
    let pairs: Vec<PairKey> = corpus.labeled_pair_keys();
    let store = RunStore::new(&config.run.runs_dir, "partial");
    screen_batch("partial", &pairs[..3], &corpus, &provider, &templates, &options, &store)
        .unwrap();

    let output = run_ok(&[
        "--config",
        config_path.to_str().unwrap(),
        "screen",
        "--resume",
        "partial",
    ]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("6 total, 6 ok"), "{stdout}");
    // Only the three remaining pairs hit the provider stack.
    assert!(stdout.contains("0 hits / 3 lookups"), "{stdout}");
    assert!(stdout.contains("across 3 provider calls"), "{stdout}");
}

#[test]
fn resume_of_unknown_run_id_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (config, _) = write_fixture(dir.path());
    let (code, stderr) = exit_code(&[
        "--config",
        config.to_str().unwrap(),
        "screen",
        "--resume",
        "ghost",
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("ghost"), "{stderr}");
}

#[test]
fn cross_product_screens_every_combination() {
    let dir = tempfile::tempdir().unwrap();
    let (config, _) = write_fixture(dir.path());
    // Add a second company not covered by the labels.
    let companies = dir.path().join("companies.csv");
    let mut raw = std::fs::read_to_string(&companies).unwrap();
    raw.push_str("c2,Globex,Global exports.,\n");
    std::fs::write(&companies, raw).unwrap();

    let output = run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "screen",
        "--cross-product",
        "--run-id",
        "cross",
    ]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("12 total"), "6 bills x 2 companies: {stdout}");
}

#[test]
fn import_splits_a_combined_csv() {
    let dir = tempfile::tempdir().unwrap();
    let combined = dir.path().join("combined.csv");
    std::fs::write(
        &combined,
        "official_title,summary_text,subjects,company_name,business_description,label\n\
         Act A,Summary A,Health,Acme,Widgets,1\n\
         Act A,Summary A,Health,Globex,Exports,0\n\
         Act B,Summary B,,Acme,Widgets,0\n",
    )
    .unwrap();
    let out_dir = dir.path().join("data");
    let output = run_ok(&[
        "import",
        "--input",
        combined.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("2 bills, 2 companies, 3 labels"), "{stdout}");
    assert!(out_dir.join("bills.csv").exists());
    assert!(out_dir.join("companies.csv").exists());
    assert!(out_dir.join("labels.csv").exists());

    // The generated files load back as a valid corpus.
    let corpus = Corpus::load(
        &out_dir.join("bills.csv"),
        &out_dir.join("companies.csv"),
        &out_dir.join("labels.csv"),
    )
    .unwrap();
    assert_eq!(corpus.bills.len(), 2);
    assert_eq!(corpus.labels.len(), 3);
}

#[test]
fn pair_failures_do_not_fail_the_command() {
    let dir = tempfile::tempdir().unwrap();
    let (config, _) = write_fixture(dir.path());
    // Rewrite the script so one bill returns unparseable prose.
    let script = dir.path().join("script.json");
    let mut entries = vec![serde_json::json!({
        "contains": ["Act number 3"],
        "text": "free prose with no labels",
    })];
    for i in 0..6 {
        let answer = if i < 2 { "YES" } else { "NO" };
        entries.push(serde_json::json!({
            "contains": [format!("Act number {i}")],
            "text": format!("ANSWER: {answer}. EXPLANATION: verdict {i} CONFIDENCE: 9{i}"),
        }));
    }
    std::fs::write(&script, serde_json::json!({ "entries": entries }).to_string()).unwrap();

    let output = run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "screen",
        "--run-id",
        "withfail",
    ]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("6 total, 5 ok, 1 failed"), "{stdout}");
    assert!(stdout.contains("parse:missing_answer=1"), "{stdout}");

    // Evaluation reports the exclusion instead of imputing a prediction.
    let output = run_ok(&["--config", config.to_str().unwrap(), "eval", "--run", "withfail"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("n (matched):      5"), "{stdout}");
    assert!(stdout.contains("excluded:         2"), "{stdout}");
}

