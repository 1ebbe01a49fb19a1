//! Sparse binary logistic regression.
//!
//! Training minimizes the mean logistic loss plus `(l2_lambda / 2)·‖w‖²`
//! (intercept unregularized) with full-batch L-BFGS and a backtracking
//! line search. Examples are put in a canonical order and identical
//! examples are merged into weighted ones before optimization, so the
//! returned model does not depend on example order or on duplication.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::corpus::SparseVector;
use crate::{DocId, Error, Result};

/// Linear scoring model over sparse term features.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub intercept: f64,
    pub weights: BTreeMap<u32, f64>,
}

impl Model {
    /// The all-zero model, which scores every document 0.5.
    pub fn zero() -> Self {
        Self::default()
    }

    /// Linear score `intercept + Σ w·x`; terms without a weight contribute nothing.
    pub fn score(&self, features: &SparseVector) -> f64 {
        features.iter().fold(self.intercept, |acc, (t, x)| {
            acc + self.weights.get(&t).map_or(0.0, |w| w * x)
        })
    }

    pub fn predict_proba(&self, features: &SparseVector) -> f64 {
        sigmoid(self.score(features))
    }

    pub fn weight(&self, term: u32) -> f64 {
        self.weights.get(&term).copied().unwrap_or(0.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }
}

const PROBA_MIN: f64 = f64::MIN_POSITIVE;
// Largest double below 1.
const PROBA_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic function, kept strictly inside (0, 1).
pub fn sigmoid(score: f64) -> f64 {
    let p = if score >= 0.0 {
        1.0 / (1.0 + (-score).exp())
    } else {
        let e = score.exp();
        e / (1.0 + e)
    };
    p.clamp(PROBA_MIN, PROBA_MAX)
}

pub fn predict_proba(model: &Model, features: &SparseVector) -> f64 {
    model.predict_proba(features)
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Clone, Copy, Debug)]
pub struct Example<'a> {
    pub features: &'a SparseVector,
    pub positive: bool,
}

impl<'a> Example<'a> {
    pub fn new(features: &'a SparseVector, positive: bool) -> Self {
        Example { features, positive }
    }

    fn sign(&self) -> f64 {
        if self.positive {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub l2_lambda: f64,
    pub max_epochs: usize,
    pub grad_tolerance: f64,
    /// First trial step of each backtracking line search.
    pub step_size: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_lambda: 1e-4,
            max_epochs: 200,
            grad_tolerance: 1e-6,
            step_size: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.l2_lambda.is_finite()
            && self.l2_lambda >= 0.0
            && self.grad_tolerance > 0.0
            && self.step_size > 0.0
            && self.step_size.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "bad training config {self:?}"
            )))
        }
    }
}

/// Gradient of the regularized objective.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub intercept: f64,
    pub weights: BTreeMap<u32, f64>,
}

impl Gradient {
    pub fn max_abs(&self) -> f64 {
        self.weights
            .values()
            .fold(self.intercept.abs(), |m, g| m.max(g.abs()))
    }
}

/// Objective value and exact gradient at `model`. The gradient covers the
/// intercept and every term present in `examples` or `model`.
pub fn loss_and_gradient(
    model: &Model,
    examples: &[Example<'_>],
    l2_lambda: f64,
) -> (f64, Gradient) {
    let mut weights: BTreeMap<u32, f64> = model.weights.keys().map(|&t| (t, 0.0)).collect();
    for ex in examples {
        for (t, _) in ex.features.iter() {
            weights.entry(t).or_insert(0.0);
        }
    }
    let mut intercept = 0.0;
    let mut loss = 0.0;
    let n = examples.len().max(1) as f64;
    for ex in examples {
        let y = ex.sign();
        let margin = y * model.score(ex.features);
        loss += softplus(-margin);
        let coef = -y * sigmoid(-margin);
        intercept += coef;
        for (t, x) in ex.features.iter() {
            *weights.get_mut(&t).unwrap() += coef * x;
        }
    }
    loss /= n;
    intercept /= n;
    let mut penalty = 0.0;
    for (t, g) in weights.iter_mut() {
        let w = model.weight(*t);
        *g = *g / n + l2_lambda * w;
        penalty += w * w;
    }
    loss += 0.5 * l2_lambda * penalty;
    (loss, Gradient { intercept, weights })
}

/// Training problem in local coordinates: parameter 0 is the intercept,
/// parameter `j + 1` is the weight of `terms[j]`.
struct Problem {
    terms: Vec<u32>,
    // Merged examples in CSR layout.
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    signs: Vec<f64>,
    counts: Vec<f64>,
    total: f64,
    l2_lambda: f64,
}

fn cmp_features(a: &SparseVector, b: &SparseVector) -> Ordering {
    let key = |&(t, x): &(u32, f64)| (t, x.to_bits());
    a.as_slice()
        .iter()
        .map(key)
        .cmp(b.as_slice().iter().map(key))
}

impl Problem {
    fn new(
        examples: &[Example<'_>],
        extra_terms: impl Iterator<Item = u32>,
        l2_lambda: f64,
    ) -> Self {
        let mut order: Vec<&Example<'_>> = examples.iter().collect();
        order.sort_by(|a, b| {
            a.positive
                .cmp(&b.positive)
                .then_with(|| cmp_features(a.features, b.features))
        });
        let mut merged: Vec<(&Example<'_>, usize)> = Vec::new();
        for ex in order {
            match merged.last_mut() {
                Some((last, count))
                    if last.positive == ex.positive
                        && cmp_features(last.features, ex.features) == Ordering::Equal =>
                {
                    *count += 1;
                }
                _ => merged.push((ex, 1)),
            }
        }

        let mut terms: Vec<u32> = examples
            .iter()
            .flat_map(|e| e.features.iter().map(|(t, _)| t))
            .chain(extra_terms)
            .collect();
        terms.sort_unstable();
        terms.dedup();
        let local: HashMap<u32, usize> =
            terms.iter().enumerate().map(|(j, &t)| (t, j + 1)).collect();

        let mut offsets = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut signs = Vec::with_capacity(merged.len());
        let mut counts = Vec::with_capacity(merged.len());
        for (ex, count) in &merged {
            for (t, x) in ex.features.iter() {
                indices.push(local[&t]);
                values.push(x);
            }
            offsets.push(indices.len());
            signs.push(ex.sign());
            counts.push(*count as f64);
        }
        Problem {
            terms,
            offsets,
            indices,
            values,
            signs,
            counts,
            total: examples.len() as f64,
            l2_lambda,
        }
    }

    fn dim(&self) -> usize {
        self.terms.len() + 1
    }

    fn evaluate(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        let mut loss = 0.0;
        for i in 0..self.signs.len() {
            let range = self.offsets[i]..self.offsets[i + 1];
            let score = self.indices[range.clone()]
                .iter()
                .zip(&self.values[range.clone()])
                .fold(theta[0], |acc, (&j, &x)| acc + theta[j] * x);
            let y = self.signs[i];
            let c = self.counts[i];
            let margin = y * score;
            loss += c * softplus(-margin);
            let coef = -c * y * sigmoid(-margin);
            grad[0] += coef;
            for (&j, &x) in self.indices[range.clone()].iter().zip(&self.values[range]) {
                grad[j] += coef * x;
            }
        }
        loss /= self.total;
        grad[0] /= self.total;
        let mut penalty = 0.0;
        for j in 1..theta.len() {
            grad[j] = grad[j] / self.total + self.l2_lambda * theta[j];
            penalty += theta[j] * theta[j];
        }
        loss + 0.5 * self.l2_lambda * penalty
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

const HISTORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Details of an optimization run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub epochs: usize,
    pub grad_norm_inf: f64,
    pub loss: f64,
    pub converged: bool,
}

/// Fits a model from scratch.
pub fn train(examples: &[Example<'_>], config: &TrainConfig) -> Result<Model> {
    train_from(examples, config, None).map(|(m, _)| m)
}

/// Fits a model, optionally warm-starting from `init`.
pub fn train_from(
    examples: &[Example<'_>],
    config: &TrainConfig,
    init: Option<&Model>,
) -> Result<(Model, TrainReport)> {
    config.validate()?;
    let has_pos = examples.iter().any(|e| e.positive);
    let has_neg = examples.iter().any(|e| !e.positive);
    if !(has_pos && has_neg) {
        return Err(Error::SingleClass);
    }
    let extra = init.into_iter().flat_map(|m| m.weights.keys().copied());
    let problem = Problem::new(examples, extra, config.l2_lambda);
    let dim = problem.dim();

    let mut theta = vec![0.0; dim];
    if let Some(m) = init {
        theta[0] = m.intercept;
        for (j, t) in problem.terms.iter().enumerate() {
            theta[j + 1] = m.weight(*t);
        }
    }
    let mut grad = vec![0.0; dim];
    let mut loss = problem.evaluate(&theta, &mut grad);

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(HISTORY);
    let mut direction = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut trial_grad = vec![0.0; dim];
    let mut alphas = [0.0; HISTORY];
    let mut epochs = 0;

    while max_abs(&grad) > config.grad_tolerance && epochs < config.max_epochs {
        epochs += 1;
        // Two-loop recursion for the quasi-Newton direction.
        direction.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
        for (k, (s, y, rho)) in history.iter().enumerate().rev() {
            let a = rho * dot(s, &direction);
            alphas[k] = a;
            direction.iter_mut().zip(y).for_each(|(d, yi)| *d -= a * yi);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            direction.iter_mut().for_each(|d| *d *= gamma);
        }
        for (k, (s, y, rho)) in history.iter().enumerate() {
            let b = rho * dot(y, &direction);
            direction
                .iter_mut()
                .zip(s)
                .for_each(|(d, si)| *d += (alphas[k] - b) * si);
        }
        let mut slope = dot(&grad, &direction);
        if slope >= 0.0 {
            history.clear();
            direction.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            slope = dot(&grad, &direction);
        }

        let mut step = if history.is_empty() {
            config.step_size.min(1.0 / max_abs(&grad).max(1e-12))
        } else {
            config.step_size
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            trial
                .iter_mut()
                .zip(theta.iter().zip(&direction))
                .for_each(|(t, (x, d))| *t = x + step * d);
            let trial_loss = problem.evaluate(&trial, &mut trial_grad);
            if trial_loss <= loss + ARMIJO * step * slope {
                accepted = Some(trial_loss);
                break;
            }
            step *= 0.5;
        }
        let Some(new_loss) = accepted else {
            break;
        };

        let s: Vec<f64> = trial.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if history.len() == HISTORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut theta, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        loss = new_loss;
    }

    let grad_norm_inf = max_abs(&grad);
    let model = Model {
        intercept: theta[0],
        weights: problem
            .terms
            .iter()
            .zip(&theta[1..])
            .filter(|(_, &w)| w != 0.0)
            .map(|(&t, &w)| (t, w))
            .collect(),
    };
    if !model.intercept.is_finite() || model.weights.values().any(|w| !w.is_finite()) {
        return Err(Error::InconsistentState("training diverged".into()));
    }
    Ok((
        model,
        TrainReport {
            epochs,
            grad_norm_inf,
            loss,
            converged: grad_norm_inf <= config.grad_tolerance,
        },
    ))
}

/// Descending score, ties broken by ascending doc id.
pub fn cmp_ranked(a: &(DocId, f64), b: &(DocId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Orders already-scored candidates by [`cmp_ranked`].
pub fn rank_scored(mut scored: Vec<(DocId, f64)>) -> Vec<DocId> {
    scored.sort_by(cmp_ranked);
    scored.into_iter().map(|(id, _)| id).collect()
}

/// Candidates ordered by decreasing predicted relevance.
///
/// Sorting uses the linear score, which orders identically to the
/// probability but does not saturate.
pub fn rank<'a, I>(model: &Model, candidates: I) -> Vec<DocId>
where
    I: IntoIterator<Item = (DocId, &'a SparseVector)>,
{
    rank_scored(
        candidates
            .into_iter()
            .map(|(id, f)| (id, model.score(f)))
            .collect(),
    )
}
