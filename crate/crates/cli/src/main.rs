//! neutro-audit: run elicitation experiments against model APIs (or the
//! offline mock), analyze persisted record files, and verify recomputed
//! statistics against the published reference values.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 verification
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use chrono::NaiveDate;
use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};

use neutro_core::backend::BackendConfig;
use neutro_core::dataset::validate_and_filter;
use neutro_core::phenomena::{bank_to_json, default_bank};
use neutro_core::report::{
    render_verification, verify_against_reference, OutputFormat, ReportBundle, ReportError,
};
use neutro_core::runner::records::{load_manifest, load_records};
use neutro_core::runner::{resume_run, run_experiment, ExperimentConfig, RunProgress};

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "neutro-audit",
    version,
    about = "Elicit (T, I, F) evaluations from language models and reproduce the reference statistics",
    long_about = None
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the configured design matrix and persist records as JSONL.
    Run(RunArgs),
    /// Analyze a record file into report tables and plot-ready CSV.
    Analyze(AnalyzeArgs),
    /// Recompute the reference statistics from a record file and compare
    /// them against the published values.
    ///
    /// Expects the reference study's published raw records (fetch them from
    /// its public repository); provenance is your responsibility. Any
    /// record file is accepted, but mock-generated data is refused unless
    /// --not-paper-data acknowledges the comparison is not against
    /// reference data.
    Verify(VerifyArgs),
    /// Print the embedded stimulus bank as a stimulus-file JSON array.
    Bank,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (single JSON document).
    #[arg(long, short)]
    config: PathBuf,
    /// Output record file (JSONL); the manifest lands beside it.
    #[arg(long, short)]
    out: PathBuf,
    /// Complete only the design tuples missing from an existing file.
    #[arg(long)]
    resume: bool,
    /// Override the configured model list (comma-separated).
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Override the configured repetitions per cell.
    #[arg(long)]
    repetitions: Option<u32>,
    /// Override the configured temperature.
    #[arg(long)]
    temperature: Option<f64>,
    /// Override the configured run date (YYYY-MM-DD).
    #[arg(long)]
    run_date: Option<NaiveDate>,
    /// Override the configured run id.
    #[arg(long)]
    run_id: Option<String>,
    /// Override the configured mock seed (mock backend only).
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured in-flight request cap.
    #[arg(long)]
    concurrency: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Record file to analyze.
    #[arg(long, short)]
    records: PathBuf,
    /// Directory receiving one file per table per format.
    #[arg(long, short)]
    out_dir: PathBuf,
    /// Formats to emit: md, csv (comma-separated).
    #[arg(long, short, value_delimiter = ',', default_values = ["md", "csv"])]
    format: Vec<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Record file to verify.
    #[arg(long, short)]
    records: PathBuf,
    /// Acknowledge that the records are not the reference study's data
    /// (required for mock-generated files).
    #[arg(long)]
    not_paper_data: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bank => {
            println!("{}", bank_to_json(&default_bank()));
            Ok(ExitCode::SUCCESS)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn cmd_run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let mut config = ExperimentConfig::load(&args.config)
        .with_context(|| format!("loading config {}", args.config.display()))?;
    apply_overrides(&mut config, &args)?;

    let bank = config.bank().context("loading stimulus bank")?;
    let backend = config
        .backend
        .build()
        .map_err(|e| anyhow!("building backend: {e}"))?;

    let mut progress = |p: RunProgress<'_>| {
        eprintln!(
            "[{}/{}] {} {} {} rep {} {}",
            p.completed,
            p.total,
            p.record.model_id,
            p.record.phenomenon_class,
            p.record.strategy.short(),
            p.record.repetition,
            if p.record.parsed.valid {
                "ok"
            } else {
                "INVALID"
            }
        );
    };

    let manifest = if args.resume {
        resume_run(
            &config,
            &bank,
            backend.as_ref(),
            &args.out,
            Some(&mut progress),
        )
    } else {
        run_experiment(
            &config,
            &bank,
            backend.as_ref(),
            &args.out,
            Some(&mut progress),
        )
    }
    .context("experiment run failed")?;

    eprintln!(
        "run {} complete: {} records ({} invalid) -> {}",
        manifest.run_id,
        manifest.records_total,
        manifest.invalid_total,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn apply_overrides(config: &mut ExperimentConfig, args: &RunArgs) -> anyhow::Result<()> {
    if let Some(models) = &args.models {
        config.models = models.clone();
    }
    if let Some(repetitions) = args.repetitions {
        config.repetitions = repetitions;
    }
    if let Some(temperature) = args.temperature {
        config.temperature = temperature;
    }
    if let Some(run_date) = args.run_date {
        config.run_date = run_date;
    }
    if let Some(run_id) = &args.run_id {
        config.run_id = Some(run_id.clone());
    }
    if let Some(concurrency) = args.concurrency {
        config.concurrency = concurrency;
    }
    if let Some(seed) = args.seed {
        match &mut config.backend {
            BackendConfig::Mock { seed: s } => *s = seed,
            BackendConfig::Http { .. } => {
                return Err(anyhow!("--seed applies only to the mock backend"));
            }
        }
    }
    config.validate().map_err(|e| anyhow!("{e}"))
}

fn load_dataset(
    records: &Path,
) -> anyhow::Result<(
    neutro_core::dataset::Dataset,
    neutro_core::dataset::ExclusionReport,
)> {
    let loaded = load_records(records)
        .with_context(|| format!("reading record file {}", records.display()))?;
    Ok(validate_and_filter(&loaded))
}

fn cmd_analyze(args: AnalyzeArgs) -> anyhow::Result<ExitCode> {
    let formats = args
        .format
        .iter()
        .map(|f| f.parse::<OutputFormat>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| anyhow!(e))?;
    let (dataset, exclusions) = load_dataset(&args.records)?;
    let bundle =
        ReportBundle::build(&dataset, &exclusions).map_err(|e| anyhow!("building report: {e}"))?;
    let written = bundle
        .emit(&dataset, &args.out_dir, &formats)
        .map_err(|e| anyhow!("emitting report: {e}"))?;
    for path in &written {
        println!("{}", path.display());
    }
    eprintln!(
        "analyzed {} valid records ({} excluded of {} gross) from run(s) {}",
        exclusions.net,
        exclusions.gross - exclusions.net,
        exclusions.gross,
        bundle.run_ids.join(", ")
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let (dataset, _) = load_dataset(&args.records)?;

    // The manifest, when present, records the backend; refuse mock data
    // unless the caller acknowledged it.
    if !args.not_paper_data {
        if let Ok(Some(manifest)) = load_manifest(&args.records) {
            if manifest.backend_kind == "mock" {
                return Err(anyhow!(
                    "record file was produced by the mock backend; pass --not-paper-data to verify anyway"
                ));
            }
        }
    }

    match verify_against_reference(&dataset, args.not_paper_data) {
        Ok(outcome) => {
            print!("{}", render_verification(&outcome));
            if outcome.passed {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_VERIFICATION))
            }
        }
        Err(e @ ReportError::NonReferenceData(_)) => Err(anyhow!("{e}")),
        Err(e) => Err(anyhow!("verification failed to run: {e}")),
    }
}
