//! One simulated TAR run over a single topic.
//!
//! Iteration 0 reviews a seed set of one random positive and one random
//! negative document. Every later iteration selects a batch from the
//! unreviewed pool using the previous model, looks up its labels, retrains
//! on everything reviewed and records the total cost under the new model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{rank_scored, train_from, Example, Model, TrainConfig};
use crate::corpus::{Dataset, Topic};
use crate::cost::{cost_point, required_positives, CostPoint, CostStructure};
use crate::seed::{child_rng, SEED_SET_STREAM, STRATEGY_STREAM};
use crate::strategies::Strategy;
use crate::{DocId, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkflowConfig {
    pub strategy: Strategy,
    pub batch_size: usize,
    pub iterations: usize,
    pub recall_target: f64,
    pub replicate_seed: u64,
    pub cost_structure: CostStructure,
    pub train_config: TrainConfig,
    /// Start each retraining from the previous model instead of zero.
    pub warm_start: bool,
}

impl WorkflowConfig {
    pub fn new(
        strategy: Strategy,
        batch_size: usize,
        iterations: usize,
        replicate_seed: u64,
    ) -> Self {
        WorkflowConfig {
            strategy,
            batch_size,
            iterations,
            recall_target: 0.8,
            replicate_seed,
            cost_structure: CostStructure::default(),
            train_config: TrainConfig::default(),
            warm_start: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.iterations == 0 {
            return Err(Error::InvalidConfig(
                "batch size and iterations must be >= 1".into(),
            ));
        }
        if !(self.recall_target > 0.0 && self.recall_target <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "recall target must be in (0, 1], got {}",
                self.recall_target
            )));
        }
        self.cost_structure.validate()?;
        self.train_config.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub batch: Vec<DocId>,
    pub batch_positives: usize,
    pub reviewed: usize,
    pub positives_found: usize,
    pub recall_reviewed: f64,
    pub batch_precision: f64,
    pub cost: CostPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub intercept: f64,
    pub nonzero_weights: usize,
    pub epochs: usize,
    pub grad_norm_inf: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: WorkflowConfig,
    pub topic: String,
    pub records: Vec<IterationRecord>,
    pub final_model: ModelSummary,
    pub seed: u64,
    /// The pool ran dry before the iteration budget was spent.
    pub truncated: bool,
    /// First iteration whose reviewed documents alone meet the recall target.
    pub target_reached_at: Option<usize>,
}

/// Fraction of positives in a batch; 0 for an empty batch.
pub fn batch_precision(labels: &[bool]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    labels.iter().filter(|&&l| l).count() as f64 / labels.len() as f64
}

fn nth_matching(topic: &Topic, want: bool, n: usize) -> usize {
    topic
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == want)
        .nth(n)
        .map(|(i, _)| i)
        .expect("count checked")
}

/// One uniformly random positive and one uniformly random negative, in that order.
pub fn make_seed_set<R: Rng + ?Sized>(
    dataset: &Dataset,
    topic: &Topic,
    rng: &mut R,
) -> Result<[DocId; 2]> {
    if !topic.is_usable() {
        return Err(Error::TopicUnusable(topic.name.clone()));
    }
    let pos = nth_matching(topic, true, rng.random_range(0..topic.positives()));
    let neg = nth_matching(topic, false, rng.random_range(0..topic.negatives()));
    let docs = dataset.documents();
    Ok([docs[pos].doc_id, docs[neg].doc_id])
}

struct RunState<'a> {
    dataset: &'a Dataset,
    topic: &'a Topic,
    reviewed: Vec<bool>,
    order: Vec<usize>,
    positives_found: usize,
}

impl RunState<'_> {
    fn review(&mut self, pos: usize) -> Result<bool> {
        if self.reviewed[pos] {
            return Err(Error::InconsistentState(format!(
                "document {} reviewed twice",
                self.dataset.documents()[pos].doc_id
            )));
        }
        self.reviewed[pos] = true;
        self.order.push(pos);
        let label = self.topic.is_positive(pos);
        self.positives_found += usize::from(label);
        Ok(label)
    }

    fn pool(&self) -> impl Iterator<Item = usize> + '_ {
        self.reviewed
            .iter()
            .enumerate()
            .filter(|(_, &r)| !r)
            .map(|(i, _)| i)
    }
}

/// Runs the workflow for `topic` on `dataset`.
pub fn run_tar(dataset: &Dataset, topic: &Topic, config: &WorkflowConfig) -> Result<RunResult> {
    config.validate()?;
    if topic.labels().len() != dataset.len() {
        return Err(Error::InconsistentState(format!(
            "topic `{}` does not cover the dataset",
            topic.name
        )));
    }
    let seed = config.replicate_seed;
    let mut seed_rng = child_rng(seed, SEED_SET_STREAM);
    let mut strategy_rng = child_rng(seed, STRATEGY_STREAM);
    let docs = dataset.documents();
    let total_pos = topic.positives();
    let required = required_positives(total_pos, config.recall_target);

    let mut state = RunState {
        dataset,
        topic,
        reviewed: vec![false; dataset.len()],
        order: Vec::new(),
        positives_found: 0,
    };
    let mut records = Vec::with_capacity(config.iterations + 1);
    let mut model: Option<Model> = None;
    let mut summary = None;
    let mut scored: Vec<(DocId, f64)> = Vec::new();
    let mut truncated = false;
    let mut target_reached_at = None;

    for iteration in 0..=config.iterations {
        let batch: Vec<DocId> = if iteration == 0 {
            make_seed_set(dataset, topic, &mut seed_rng)?.to_vec()
        } else {
            if scored.is_empty() {
                truncated = true;
                break;
            }
            config
                .strategy
                .select(&scored, config.batch_size, &mut strategy_rng)?
        };
        let mut batch_labels = Vec::with_capacity(batch.len());
        for &id in &batch {
            let pos = dataset
                .position(id)
                .ok_or_else(|| Error::InconsistentState(format!("unknown document {id}")))?;
            batch_labels.push(state.review(pos)?);
        }

        let examples: Vec<Example<'_>> = state
            .order
            .iter()
            .map(|&p| Example::new(&docs[p].features, topic.is_positive(p)))
            .collect();
        let init = if config.warm_start {
            model.as_ref()
        } else {
            None
        };
        let (trained, report) = train_from(&examples, &config.train_config, init)?;

        scored = state
            .pool()
            .map(|p| (docs[p].doc_id, trained.score(&docs[p].features)))
            .collect();
        let ranked_labels: Vec<bool> = rank_scored(scored.clone())
            .into_iter()
            .map(|id| topic.is_positive(dataset.position(id).expect("pool ids are valid")))
            .collect();
        let reviewed = state.order.len();
        let cost = cost_point(
            state.positives_found,
            reviewed - state.positives_found,
            &ranked_labels,
            total_pos,
            config.recall_target,
            &config.cost_structure,
        )?;
        if target_reached_at.is_none() && state.positives_found >= required {
            target_reached_at = Some(iteration);
        }
        let batch_positives = batch_labels.iter().filter(|&&l| l).count();
        records.push(IterationRecord {
            iteration,
            batch_precision: batch_precision(&batch_labels),
            batch,
            batch_positives,
            reviewed,
            positives_found: state.positives_found,
            recall_reviewed: state.positives_found as f64 / total_pos as f64,
            cost,
        });
        summary = Some(ModelSummary {
            intercept: trained.intercept,
            nonzero_weights: trained.weights.len(),
            epochs: report.epochs,
            grad_norm_inf: report.grad_norm_inf,
            converged: report.converged,
        });
        model = Some(trained);
    }

    Ok(RunResult {
        config: config.clone(),
        topic: topic.name.clone(),
        records,
        final_model: summary.expect("seed round always trains"),
        seed,
        truncated,
        target_reached_at,
    })
}
