//! Long-format run table and the summaries derived from it.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::stats::{mean_ci, paired_t_bonferroni, relative_reduction, welch_t};
use crate::strategies::Strategy;
use crate::workflow::RunResult;
use crate::{Error, Result};

/// One row of `runs.csv`: one iteration of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub dataset: String,
    pub topic: String,
    pub strategy: Strategy,
    pub batch_size: usize,
    pub replicate: usize,
    pub iteration: usize,
    pub reviewed: usize,
    pub batch_pos: usize,
    pub batch_precision: f64,
    pub recall_reviewed: f64,
    pub penalty_depth: usize,
    pub total_cost: f64,
}

pub fn run_rows(dataset: &str, replicate: usize, run: &RunResult) -> Vec<RunRow> {
    run.records
        .iter()
        .map(|r| RunRow {
            dataset: dataset.to_owned(),
            topic: run.topic.clone(),
            strategy: run.config.strategy,
            batch_size: run.config.batch_size,
            replicate,
            iteration: r.iteration,
            reviewed: r.reviewed,
            batch_pos: r.batch_positives,
            batch_precision: r.batch_precision,
            recall_reviewed: r.recall_reviewed,
            penalty_depth: r.cost.penalty_depth,
            total_cost: r.cost.total,
        })
        .collect()
}

/// One row of `summary.csv`. Comparison columns are empty for the baseline
/// strategy and wherever fewer than two paired values exist.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub strategy: Strategy,
    pub batch_size: usize,
    pub n_train_checkpoint: usize,
    pub mean_cost: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub rel_reduction_pct: Option<f64>,
    pub t_stat: Option<f64>,
    pub p_raw: Option<f64>,
    pub significant: Option<bool>,
    pub welch_t: Option<f64>,
    pub welch_p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryOptions {
    /// Reviewed-document counts to summarize; `None` keeps every count present.
    pub checkpoints: Option<Vec<usize>>,
    /// Bonferroni divisor; `None` counts the tests actually performed.
    pub n_tests: Option<usize>,
    pub confidence: f64,
    pub baseline: Strategy,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        SummaryOptions {
            checkpoints: None,
            n_tests: None,
            confidence: 0.99,
            baseline: Strategy::Random,
        }
    }
}

type CellKey = (String, usize, usize);
type Paired = BTreeMap<(String, usize), f64>;

/// Per-(dataset, strategy, batch size, checkpoint) costs pooled over topics
/// and replicates, compared against the baseline strategy on matching
/// (topic, replicate) pairs.
pub fn summarize(rows: &[RunRow], options: &SummaryOptions) -> Result<Vec<SummaryRow>> {
    let mut cells: BTreeMap<CellKey, BTreeMap<Strategy, Paired>> = BTreeMap::new();
    for row in rows {
        if let Some(cps) = &options.checkpoints {
            if !cps.contains(&row.reviewed) {
                continue;
            }
        }
        let key = (row.dataset.clone(), row.batch_size, row.reviewed);
        let prev = cells
            .entry(key)
            .or_default()
            .entry(row.strategy)
            .or_default()
            .insert((row.topic.clone(), row.replicate), row.total_cost);
        if prev.is_some() {
            return Err(Error::InconsistentState(format!(
                "duplicate row for {}/{}/{}/{} at {} reviewed",
                row.dataset, row.topic, row.strategy, row.replicate, row.reviewed
            )));
        }
    }

    let pairs = |base: &Paired, cand: &Paired| -> (Vec<f64>, Vec<f64>) {
        cand.iter()
            .filter_map(|(k, &c)| base.get(k).map(|&b| (c, b)))
            .unzip()
    };
    let n_tests = options.n_tests.unwrap_or_else(|| {
        cells
            .values()
            .flat_map(|by_strategy| {
                let base = by_strategy.get(&options.baseline);
                by_strategy.iter().filter(move |(s, c)| {
                    **s != options.baseline && base.is_some_and(|b| pairs(b, c).0.len() >= 2)
                })
            })
            .count()
    });

    let mut out = Vec::new();
    for ((dataset, batch_size, checkpoint), by_strategy) in &cells {
        let base = by_strategy.get(&options.baseline);
        let base_values: Option<Vec<f64>> = base.map(|b| b.values().copied().collect());
        for (&strategy, costs) in by_strategy {
            let values: Vec<f64> = costs.values().copied().collect();
            let ci = mean_ci(&values, options.confidence).ok();
            let mean_cost = super::stats::mean(&values);
            let mut row = SummaryRow {
                dataset: dataset.clone(),
                strategy,
                batch_size: *batch_size,
                n_train_checkpoint: *checkpoint,
                mean_cost,
                ci_low: ci.map(|c| c.low),
                ci_high: ci.map(|c| c.high),
                rel_reduction_pct: None,
                t_stat: None,
                p_raw: None,
                significant: None,
                welch_t: None,
                welch_p: None,
            };
            if let (Some(base), Some(base_values)) = (base, &base_values) {
                if strategy != options.baseline {
                    row.rel_reduction_pct = Some(relative_reduction(
                        mean_cost,
                        super::stats::mean(base_values),
                    ));
                    let (cand, paired_base) = pairs(base, costs);
                    if let Ok(t) = paired_t_bonferroni(&cand, &paired_base, n_tests) {
                        row.t_stat = Some(t.t_stat);
                        row.p_raw = Some(t.p_raw);
                        row.significant = Some(t.significant);
                    }
                    if let Ok(w) = welch_t(&values, base_values, n_tests) {
                        row.welch_t = Some(w.t_stat);
                        row.welch_p = Some(w.p_raw);
                    }
                }
            }
            out.push(row);
        }
    }
    Ok(out)
}

/// Per-iteration precision and recall of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
}

impl From<&RunResult> for Trace {
    fn from(run: &RunResult) -> Self {
        Trace {
            precision: run.records.iter().map(|r| r.batch_precision).collect(),
            recall: run.records.iter().map(|r| r.recall_reviewed).collect(),
        }
    }
}

/// Mean batch precision per iteration across replicates.
///
/// With `cutoff = Some(target)` the matrix stops before the first iteration
/// whose mean recall on reviewed documents reaches `target`.
pub fn heatmap_matrix(traces: &[Trace], cutoff: Option<f64>) -> Result<Vec<f64>> {
    let Some(first) = traces.first() else {
        return Ok(Vec::new());
    };
    let len = first.precision.len();
    for t in traces {
        if t.precision.len() != len || t.recall.len() != len {
            return Err(Error::LengthMismatch {
                left: len,
                right: t.precision.len(),
            });
        }
    }
    let n = traces.len() as f64;
    let column_mean = |pick: fn(&Trace) -> &[f64], i: usize| -> f64 {
        traces.iter().map(|t| pick(t)[i]).sum::<f64>() / n
    };
    let mut out: Vec<f64> = (0..len).map(|i| column_mean(|t| &t.precision, i)).collect();
    if let Some(target) = cutoff {
        if let Some(c) = (0..len).find(|&i| column_mean(|t| &t.recall, i) >= target - 1e-12) {
            out.truncate(c);
        }
    }
    Ok(out)
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Writes headers even when `rows` is empty.
pub fn write_csv_with_header<T: Serialize, W: Write>(
    header: &[&str],
    rows: &[T],
    writer: W,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_run_rows<R: Read>(reader: R) -> Result<Vec<RunRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub const RUNS_HEADER: [&str; 12] = [
    "dataset",
    "topic",
    "strategy",
    "batch_size",
    "replicate",
    "iteration",
    "reviewed",
    "batch_pos",
    "batch_precision",
    "recall_reviewed",
    "penalty_depth",
    "total_cost",
];

pub const SUMMARY_HEADER: [&str; 13] = [
    "dataset",
    "strategy",
    "batch_size",
    "n_train_checkpoint",
    "mean_cost",
    "ci_low",
    "ci_high",
    "rel_reduction_pct",
    "t_stat",
    "p_raw",
    "significant",
    "welch_t",
    "welch_p",
];
