//! Command-line front end: ingest, import, screen, draft, eval, compare.
//!
//! Exit codes are a stable contract for scripting: 0 success, 1 usage or
//! config error, 2 data error, 3 provider error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use billscreen_core::config::{ConfigError, PipelineConfig};

#[derive(Parser)]
#[command(name = "billscreen", version, about = "Screen Congressional bills for company relevance, draft sponsor letters, and benchmark predictions")]
struct Cli {
    /// Pipeline config file (TOML).
    #[arg(long, global = true, default_value = "billscreen.toml")]
    config: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProviderArg {
    Http,
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Base,
    Aggressive,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the dataset files, printing counts.
    Ingest,
    /// Split a combined pair-level CSV into the canonical dataset files.
    Import {
        /// Combined CSV with bill, company, and label columns.
        #[arg(long)]
        input: PathBuf,
        /// Directory for the generated bills/companies/labels files.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Screen (bill, company) pairs for relevance.
    Screen {
        /// Override the provider kind from the config.
        #[arg(long, value_enum)]
        provider: Option<ProviderArg>,
        /// Script file for the mock provider.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Resume an interrupted run, completing only unpersisted pairs.
        #[arg(long)]
        resume: Option<String>,
        /// Run id for a fresh run (defaults to a timestamp id).
        #[arg(long)]
        run_id: Option<String>,
        /// Screen every bill against every company instead of the labeled
        /// pairs.
        #[arg(long)]
        cross_product: bool,
    },
    /// Draft sponsor letters for every YES assessment in a run.
    Draft {
        #[arg(long)]
        run: String,
        #[arg(long, value_enum, default_value_t = VariantArg::Base)]
        variant: VariantArg,
        #[arg(long, value_enum)]
        provider: Option<ProviderArg>,
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Evaluate a run against the ground-truth labels and write the report.
    Eval {
        #[arg(long)]
        run: String,
    },
    /// Compare two runs' reports side by side.
    Compare {
        #[arg(long)]
        run_a: String,
        #[arg(long)]
        run_b: String,
    },
}

/// Errors carrying the documented exit codes.
enum CliError {
    Usage(String),
    Data(String),
    Provider(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Provider(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Provider(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<billscreen_core::corpus::CorpusError> for CliError {
    fn from(e: billscreen_core::corpus::CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<billscreen_core::evalbench::EvalError> for CliError {
    fn from(e: billscreen_core::evalbench::EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<billscreen_core::llmgate::ProviderError> for CliError {
    fn from(e: billscreen_core::llmgate::ProviderError) -> Self {
        CliError::Provider(e.to_string())
    }
}

impl From<billscreen_core::screener::RunError> for CliError {
    fn from(e: billscreen_core::screener::RunError) -> Self {
        use billscreen_core::screener::RunError;
        match e {
            RunError::ConfigMismatch { .. } | RunError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<billscreen_core::drafter::DraftError> for CliError {
    fn from(e: billscreen_core::drafter::DraftError) -> Self {
        use billscreen_core::drafter::DraftError;
        match e {
            DraftError::Provider(p) => CliError::Provider(p.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    if cli.config.exists() {
        return Ok(PipelineConfig::load(&cli.config)?);
    }
    // The default path may simply not exist yet; an explicit path must.
    if cli.config.as_path() == std::path::Path::new("billscreen.toml") {
        let mut config = PipelineConfig::default();
        config.apply_env_overrides();
        config.validate()?;
        Ok(config)
    } else {
        Err(CliError::Usage(format!(
            "config file {} does not exist",
            cli.config.display()
        )))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_config(&cli)?;
    match &cli.command {
        Command::Ingest => commands::ingest(&config),
        Command::Import { input, out_dir } => commands::import(input, out_dir),
        Command::Screen {
            provider,
            script,
            resume,
            run_id,
            cross_product,
        } => commands::screen(
            &config,
            commands::ScreenArgs {
                provider: provider.map(|p| p == ProviderArg::Mock),
                script: script.clone(),
                resume: resume.clone(),
                run_id: run_id.clone(),
                cross_product: *cross_product,
            },
        ),
        Command::Draft {
            run,
            variant,
            provider,
            script,
        } => commands::draft(
            &config,
            run,
            match variant {
                VariantArg::Base => billscreen_core::drafter::Variant::Base,
                VariantArg::Aggressive => billscreen_core::drafter::Variant::Aggressive,
            },
            provider.map(|p| p == ProviderArg::Mock),
            script.clone(),
        ),
        Command::Eval { run } => commands::eval(&config, run).map(|_| ()),
        Command::Compare { run_a, run_b } => commands::compare(&config, run_a, run_b),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes; everything else is a
            // usage error under the exit-code contract.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
