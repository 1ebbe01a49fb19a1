//! `tarsim`: convert annotation corpora, run replicated TAR experiments and
//! recompute their summaries.
//!
//! Exit codes: 0 success, 1 invalid flags or configuration, 2 data or I/O
//! errors, 3 internal invariant violations.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

use tarsim_core::classifier::TrainConfig;
use tarsim_core::corpus::{
    askfm_records, load_dataset, wikipedia_records, write_canonical, Format,
};
use tarsim_core::cost::{manual_review_baseline, CostStructure};
use tarsim_core::experiment::{
    read_run_rows, run_plan, summarize, write_csv_with_header, write_outputs, ExperimentPlan,
    OutputOptions, Schedule, SummaryOptions, SUMMARY_HEADER,
};
use tarsim_core::strategies::Strategy;

const METADATA: &str = "metadata.json";
/// Training documents reviewed per run when `--iterations` is omitted.
const DEFAULT_TRAINING_BUDGET: usize = 8000;

#[derive(Parser, Debug)]
#[command(
    name = "tarsim",
    version,
    about = "TAR cost simulator for content moderation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert a raw annotation corpus to canonical JSONL.
    Convert {
        source: Source,
        input: PathBuf,
        output: PathBuf,
    },
    /// Run a replicated experiment plan and write CSV outputs.
    Run(RunArgs),
    /// Recompute summary.csv from a runs.csv.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Source {
    Wikipedia,
    Askfm,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Canonical JSONL file, or raw corpus path with --format.
    #[arg(long)]
    dataset: PathBuf,
    /// canonical-jsonl, wikipedia-attack or askfm.
    #[arg(long, default_value = "canonical-jsonl", value_parser = parse_format)]
    format: Format,
    /// Dataset name in the outputs; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
    /// Topics to run (default: all).
    #[arg(long, value_delimiter = ',')]
    topics: Option<Vec<String>>,
    /// random, uncertainty, relevance (default: all three).
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    strategy: Vec<Strategy>,
    #[arg(long, value_delimiter = ',', default_values_t = [100, 200])]
    batch_size: Vec<usize>,
    /// One budget per batch size, or a single budget for all of them
    /// (default: 8000 training documents per run).
    #[arg(long, value_delimiter = ',')]
    iterations: Option<Vec<usize>>,
    #[arg(long, default_value_t = 20)]
    replicates: usize,
    #[arg(long, default_value_t = 0.8)]
    recall_target: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// Start each iteration's training from the previous model.
    #[arg(long)]
    warm_start: bool,
    /// Reviewed-document counts to summarize (default: every iteration).
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<usize>>,
    /// Bonferroni divisor (default: number of tests performed).
    #[arg(long)]
    n_tests: Option<usize>,
    /// Truncate heatmaps once mean training recall reaches the target.
    #[arg(long)]
    heatmap_cutoff: bool,
    /// L2 penalty on term weights (default: 1e-4).
    #[arg(long)]
    l2: Option<f64>,
    /// Optimizer iteration cap per training round (default: 200).
    #[arg(long)]
    max_epochs: Option<usize>,
}

#[derive(clap::Args, Debug)]
struct StatsArgs {
    runs: PathBuf,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the value recorded in metadata.json.
    #[arg(long)]
    n_tests: Option<usize>,
    /// Overrides the value recorded in metadata.json.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<usize>>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: tarsim_core::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: tarsim_core::Error| e.to_string())
}

/// Flag combinations clap cannot check on its own.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn schedules(args: &RunArgs) -> anyhow::Result<Vec<Schedule>> {
    if args.batch_size.is_empty() || args.batch_size.contains(&0) {
        return Err(usage("--batch-size values must be positive"));
    }
    let iterations = match &args.iterations {
        None => args
            .batch_size
            .iter()
            .map(|&b| DEFAULT_TRAINING_BUDGET.div_ceil(b))
            .collect(),
        Some(its) if its.len() == 1 => vec![its[0]; args.batch_size.len()],
        Some(its) if its.len() == args.batch_size.len() => its.clone(),
        Some(its) => {
            return Err(usage(format!(
                "--iterations has {} values but --batch-size has {}",
                its.len(),
                args.batch_size.len()
            )))
        }
    };
    Ok(args
        .batch_size
        .iter()
        .zip(iterations)
        .map(|(&batch_size, iterations)| Schedule {
            batch_size,
            iterations,
        })
        .collect())
}

fn plan(args: &RunArgs) -> anyhow::Result<ExperimentPlan> {
    if !(args.recall_target > 0.0 && args.recall_target <= 1.0) {
        return Err(usage("--recall-target must be in (0, 1]"));
    }
    let mut strategies = if args.strategy.is_empty() {
        Strategy::ALL.to_vec()
    } else {
        args.strategy.clone()
    };
    strategies.sort();
    strategies.dedup();
    let mut train_config = TrainConfig::default();
    if let Some(l2) = args.l2 {
        train_config.l2_lambda = l2;
    }
    if let Some(e) = args.max_epochs {
        train_config.max_epochs = e;
    }
    let plan = ExperimentPlan {
        topics: args.topics.clone(),
        strategies,
        schedules: schedules(args)?,
        n_replicates: args.replicates,
        recall_target: args.recall_target,
        base_seed: args.seed,
        cost_structure: CostStructure::default(),
        train_config,
        warm_start: args.warm_start,
    };
    plan.validate().map_err(|e| usage(e.to_string()))?;
    Ok(plan)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn convert(source: Source, input: &Path, output: &Path) -> anyhow::Result<()> {
    let records = match source {
        Source::Wikipedia => wikipedia_records(input)?,
        Source::Askfm => askfm_records(input)?,
    };
    let mut out = create(output)?;
    write_canonical(&records, &mut out)?;
    out.flush()
        .with_context(|| format!("cannot write {}", output.display()))?;
    info!("wrote {} records to {}", records.len(), output.display());
    Ok(())
}

fn run(args: &RunArgs) -> anyhow::Result<()> {
    let plan = plan(args)?;
    let mut dataset = load_dataset(&args.dataset, args.format)?;
    if let Some(name) = &args.name {
        dataset.name = name.clone();
    }
    if let Some(topics) = &plan.topics {
        if let Some(t) = topics.iter().find(|t| dataset.topic(t).is_none()) {
            return Err(usage(format!("dataset has no topic named `{t}`")));
        }
    }
    info!(
        "loaded {}: {} documents, {} topics",
        dataset.name,
        dataset.len(),
        dataset.topics().len()
    );
    let output = run_plan(&dataset, &plan, args.jobs.unwrap_or(0))?;
    info!("completed {} runs", output.runs.len());

    let options = OutputOptions {
        summary: SummaryOptions {
            checkpoints: args.checkpoints.clone(),
            n_tests: args.n_tests,
            ..SummaryOptions::default()
        },
        heatmap_cutoff: args.heatmap_cutoff,
    };
    write_outputs(&args.out, &plan, &output, &options)?;

    let metadata = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "git_describe": env!("TARSIM_GIT_DESCRIBE"),
        "seed": plan.base_seed,
        "dataset": {
            "path": args.dataset.display().to_string(),
            "format": format!("{:?}", args.format),
            "name": dataset.name,
            "n_docs": dataset.len(),
        },
        "features": { "weighting": "1 + log(tf)", "log_base": "natural", "lowercase": true },
        "manual_review_baseline": manual_review_baseline(dataset.len(), plan.recall_target),
        "plan": plan,
        "output": options,
        "skipped_topics": output.skipped.iter().map(|s| &s.topic).collect::<Vec<_>>(),
    });
    let path = args.out.join(METADATA);
    let mut out = create(&path)?;
    serde_json::to_writer_pretty(&mut out, &metadata)?;
    writeln!(out)?;
    out.flush()?;
    info!("wrote outputs to {}", args.out.display());
    Ok(())
}

/// Summary options recorded by `run` next to `runs`, if any.
fn recorded_options(runs: &Path) -> anyhow::Result<SummaryOptions> {
    let path = runs.with_file_name(METADATA);
    if !path.exists() {
        return Ok(SummaryOptions::default());
    }
    let text =
        fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("malformed {}", path.display()))?;
    match value.pointer("/output/summary") {
        Some(v) => Ok(serde_json::from_value(v.clone())
            .with_context(|| format!("malformed summary options in {}", path.display()))?),
        None => Ok(SummaryOptions::default()),
    }
}

fn stats(args: &StatsArgs) -> anyhow::Result<()> {
    let mut options = recorded_options(&args.runs)?;
    if args.n_tests.is_some() {
        options.n_tests = args.n_tests;
    }
    if args.checkpoints.is_some() {
        options.checkpoints = args.checkpoints.clone();
    }
    let file = File::open(&args.runs).map_err(|e| tarsim_core::Error::Io {
        path: args.runs.clone(),
        source: e,
    })?;
    let rows = read_run_rows(BufReader::new(file))?;
    let summary = summarize(&rows, &options)?;
    match &args.out {
        Some(path) => {
            let mut out = create(path)?;
            write_csv_with_header(&SUMMARY_HEADER, &summary, &mut out)?;
            out.flush()?;
        }
        None => write_csv_with_header(&SUMMARY_HEADER, &summary, io::stdout().lock())?,
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<tarsim_core::Error>() {
        Some(tarsim_core::Error::InvalidConfig(_)) => 1,
        Some(e) if e.is_data_error() => 2,
        Some(_) => 3,
        // Failures outside the core are file-system and serialization errors.
        None => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Convert {
            source,
            input,
            output,
        } => convert(*source, input, output),
        Command::Run(args) => run(args),
        Command::Stats(args) => stats(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
