//! Replicated experiment plans and their output tables.
//!
//! Replicate `r` of a topic uses the same seed for every strategy and batch
//! size, so strategies are compared on identical seed sets. Runs execute on
//! a worker pool but results are always assembled in plan order, so output
//! bytes do not depend on the number of workers.

mod stats;
mod tables;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::TrainConfig;
use crate::corpus::Dataset;
use crate::cost::CostStructure;
use crate::seed::replicate_seed;
use crate::strategies::Strategy;
use crate::workflow::{run_tar, RunResult, WorkflowConfig};
use crate::{Error, Result};

pub use stats::{
    mean, mean_ci, paired_t_bonferroni, relative_reduction, t_critical, variance, welch_t,
    ConfidenceInterval, TTest,
};
pub use tables::{
    heatmap_matrix, read_run_rows, run_rows, summarize, write_csv, write_csv_with_header, RunRow,
    SummaryOptions, SummaryRow, Trace, RUNS_HEADER, SUMMARY_HEADER,
};

/// A batch size and the number of iterations run with it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub batch_size: usize,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// Topic names to run; `None` runs every topic.
    pub topics: Option<Vec<String>>,
    pub strategies: Vec<Strategy>,
    pub schedules: Vec<Schedule>,
    pub n_replicates: usize,
    pub recall_target: f64,
    pub base_seed: u64,
    pub cost_structure: CostStructure,
    pub train_config: TrainConfig,
    pub warm_start: bool,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            topics: None,
            strategies: Strategy::ALL.to_vec(),
            schedules: vec![
                Schedule {
                    batch_size: 100,
                    iterations: 80,
                },
                Schedule {
                    batch_size: 200,
                    iterations: 40,
                },
            ],
            n_replicates: 20,
            recall_target: 0.8,
            base_seed: 0,
            cost_structure: CostStructure::default(),
            train_config: TrainConfig::default(),
            warm_start: false,
        }
    }
}

/// One executed run with its place in the plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedRun {
    pub replicate: usize,
    pub result: RunResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkippedTopic {
    pub topic: String,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct PlanOutput {
    pub dataset: String,
    /// Ordered by topic, schedule, strategy, replicate.
    pub runs: Vec<PlannedRun>,
    pub skipped: Vec<SkippedTopic>,
}

impl PlanOutput {
    pub fn rows(&self) -> Vec<RunRow> {
        self.runs
            .iter()
            .flat_map(|r| run_rows(&self.dataset, r.replicate, &r.result))
            .collect()
    }

    /// Runs for one (topic, strategy, batch size) cell, in replicate order.
    pub fn cell(&self, topic: &str, strategy: Strategy, batch_size: usize) -> Vec<&RunResult> {
        self.runs
            .iter()
            .map(|r| &r.result)
            .filter(|r| {
                r.topic == topic
                    && r.config.strategy == strategy
                    && r.config.batch_size == batch_size
            })
            .collect()
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() || self.schedules.is_empty() {
            return Err(Error::InvalidConfig(
                "plan needs strategies and schedules".into(),
            ));
        }
        if self.n_replicates == 0 {
            return Err(Error::InvalidConfig(
                "plan needs at least one replicate".into(),
            ));
        }
        Ok(())
    }

    fn workflow_config(&self, strategy: Strategy, schedule: Schedule, seed: u64) -> WorkflowConfig {
        WorkflowConfig {
            strategy,
            batch_size: schedule.batch_size,
            iterations: schedule.iterations,
            recall_target: self.recall_target,
            replicate_seed: seed,
            cost_structure: self.cost_structure,
            train_config: self.train_config.clone(),
            warm_start: self.warm_start,
        }
    }
}

/// Executes every (topic, schedule, strategy, replicate) run of `plan`.
///
/// `jobs = 0` uses the available parallelism. Unusable topics are skipped
/// and reported in [`PlanOutput::skipped`].
pub fn run_plan(dataset: &Dataset, plan: &ExperimentPlan, jobs: usize) -> Result<PlanOutput> {
    plan.validate()?;
    let topics: Vec<&crate::corpus::Topic> = match &plan.topics {
        None => dataset.topics().iter().collect(),
        Some(names) => names
            .iter()
            .map(|n| {
                dataset
                    .topic(n)
                    .ok_or_else(|| Error::InvalidConfig(format!("no topic named `{n}`")))
            })
            .collect::<Result<_>>()?,
    };
    let mut skipped = Vec::new();
    let mut tasks = Vec::new();
    for topic in topics {
        if !topic.is_usable() {
            warn!(
                "skipping topic `{}`: no positive or no negative documents",
                topic.name
            );
            skipped.push(SkippedTopic {
                topic: topic.name.clone(),
                reason: format!(
                    "{} positives, {} negatives",
                    topic.positives(),
                    topic.negatives()
                ),
            });
            continue;
        }
        for &schedule in &plan.schedules {
            for &strategy in &plan.strategies {
                for replicate in 0..plan.n_replicates {
                    let seed = replicate_seed(plan.base_seed, &topic.name, replicate);
                    tasks.push((
                        topic,
                        replicate,
                        plan.workflow_config(strategy, schedule, seed),
                    ));
                }
            }
        }
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if jobs > 0 {
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let results: Vec<Result<PlannedRun>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(topic, replicate, cfg)| {
                run_tar(dataset, topic, cfg).map(|result| PlannedRun {
                    replicate: *replicate,
                    result,
                })
            })
            .collect()
    });
    Ok(PlanOutput {
        dataset: dataset.name.clone(),
        runs: results.into_iter().collect::<Result<_>>()?,
        skipped,
    })
}

/// Topic name reduced to characters safe in file names.
pub fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputOptions {
    pub summary: SummaryOptions,
    /// Cut heatmaps once mean recall on reviewed documents reaches the target.
    pub heatmap_cutoff: bool,
}

#[derive(Serialize)]
struct HeatmapRow {
    iteration: usize,
    mean_precision: f64,
}

#[derive(Serialize)]
struct SkippedRow<'a> {
    dataset: &'a str,
    topic: &'a str,
    reason: &'a str,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `runs.csv`, `summary.csv`, `skipped.csv` and one heatmap per
/// (topic, strategy). The first schedule's heatmaps are named
/// `heatmap_<topic>_<strategy>.csv`; later schedules add `_b<batch>`.
pub fn write_outputs(
    out_dir: &Path,
    plan: &ExperimentPlan,
    output: &PlanOutput,
    options: &OutputOptions,
) -> Result<Vec<SummaryRow>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let rows = output.rows();
    write_csv_with_header(&RUNS_HEADER, &rows, create(&out_dir.join("runs.csv"))?)?;
    let summary = summarize(&rows, &options.summary)?;
    write_csv_with_header(
        &SUMMARY_HEADER,
        &summary,
        create(&out_dir.join("summary.csv"))?,
    )?;

    let skipped: Vec<SkippedRow<'_>> = output
        .skipped
        .iter()
        .map(|s| SkippedRow {
            dataset: &output.dataset,
            topic: &s.topic,
            reason: &s.reason,
        })
        .collect();
    write_csv_with_header(
        &["dataset", "topic", "reason"],
        &skipped,
        create(&out_dir.join("skipped.csv"))?,
    )?;

    let mut topics: Vec<&str> = Vec::new();
    for r in &output.runs {
        if !topics.contains(&r.result.topic.as_str()) {
            topics.push(&r.result.topic);
        }
    }
    let cutoff = options.heatmap_cutoff.then_some(plan.recall_target);
    for (i, schedule) in plan.schedules.iter().enumerate() {
        for topic in &topics {
            for &strategy in &plan.strategies {
                let traces: Vec<Trace> = output
                    .cell(topic, strategy, schedule.batch_size)
                    .into_iter()
                    .map(Trace::from)
                    .collect();
                if traces.is_empty() {
                    continue;
                }
                let matrix = heatmap_matrix(&traces, cutoff)?;
                let suffix = if i == 0 {
                    String::new()
                } else {
                    format!("_b{}", schedule.batch_size)
                };
                let name = format!("heatmap_{}_{}{}.csv", file_safe(topic), strategy, suffix);
                let hrows: Vec<HeatmapRow> = matrix
                    .into_iter()
                    .enumerate()
                    .map(|(iteration, mean_precision)| HeatmapRow {
                        iteration,
                        mean_precision,
                    })
                    .collect();
                write_csv_with_header(
                    &["iteration", "mean_precision"],
                    &hrows,
                    create(&out_dir.join(name))?,
                )?;
            }
        }
    }
    Ok(summary)
}
