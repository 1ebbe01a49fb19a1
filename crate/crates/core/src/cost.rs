//! Two-phase review cost: documents reviewed so far plus the cost of the
//! shortest prefix of the current ranking that lifts recall to the target.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-document review costs by phase and true label.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostStructure {
    pub c_train_pos: f64,
    pub c_train_neg: f64,
    pub c_phase2_pos: f64,
    pub c_phase2_neg: f64,
}

impl Default for CostStructure {
    fn default() -> Self {
        Self::uniform(1.0)
    }
}

impl CostStructure {
    pub fn uniform(c: f64) -> Self {
        CostStructure {
            c_train_pos: c,
            c_train_neg: c,
            c_phase2_pos: c,
            c_phase2_neg: c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.c_train_pos,
            self.c_train_neg,
            self.c_phase2_pos,
            self.c_phase2_neg,
        ];
        if all.iter().all(|c| c.is_finite() && *c >= 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "cost coefficients must be finite and >= 0: {self:?}"
            )))
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        CostStructure {
            c_train_pos: self.c_train_pos * factor,
            c_train_neg: self.c_train_neg * factor,
            c_phase2_pos: self.c_phase2_pos * factor,
            c_phase2_neg: self.c_phase2_neg * factor,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub cost: f64,
    pub depth: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostPoint {
    pub reviewed_cost: f64,
    pub penalty_cost: f64,
    pub total: f64,
    pub penalty_depth: usize,
    pub recall_achieved: f64,
}

/// `ceil(target · n)`, treating products within rounding noise of an
/// integer as that integer (so 0.7 · 10 is 7, not 8).
fn ceil_fraction(target: f64, n: usize) -> usize {
    let x = target * n as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

fn check_target(target: f64) -> Result<()> {
    if target > 0.0 && target <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "recall target must be in (0, 1], got {target}"
        )))
    }
}

/// Fewest positives whose recall is at least `target`.
pub fn required_positives(total_pos: usize, target: f64) -> usize {
    ceil_fraction(target, total_pos)
}

/// Cost of reviewing the ranking top-down until `required_positives` is met.
///
/// `ranked_labels[i]` is the true label of the `i`-th unreviewed document in
/// ranking order.
pub fn phase2_penalty(
    ranked_labels: &[bool],
    found_pos: usize,
    total_pos: usize,
    target: f64,
    costs: &CostStructure,
) -> Result<Penalty> {
    check_target(target)?;
    if found_pos > total_pos {
        return Err(Error::InconsistentState(format!(
            "found {found_pos} positives of {total_pos}"
        )));
    }
    let required = required_positives(total_pos, target);
    if found_pos >= required {
        return Ok(Penalty {
            cost: 0.0,
            depth: 0,
        });
    }
    let mut missing = required - found_pos;
    let mut cost = 0.0;
    for (i, &positive) in ranked_labels.iter().enumerate() {
        if positive {
            cost += costs.c_phase2_pos;
            missing -= 1;
            if missing == 0 {
                return Ok(Penalty { cost, depth: i + 1 });
            }
        } else {
            cost += costs.c_phase2_neg;
        }
    }
    Err(Error::InconsistentState(format!(
        "ranking holds too few positives to reach recall {target}"
    )))
}

/// Combines reviewed-document cost with a phase-two penalty.
pub fn total_cost(
    reviewed_pos: usize,
    reviewed_neg: usize,
    total_pos: usize,
    penalty: Penalty,
    phase2_found: usize,
    costs: &CostStructure,
) -> CostPoint {
    let reviewed_cost =
        reviewed_pos as f64 * costs.c_train_pos + reviewed_neg as f64 * costs.c_train_neg;
    let recall_achieved = if total_pos == 0 {
        1.0
    } else {
        (reviewed_pos + phase2_found) as f64 / total_pos as f64
    };
    CostPoint {
        reviewed_cost,
        penalty_cost: penalty.cost,
        total: reviewed_cost + penalty.cost,
        penalty_depth: penalty.depth,
        recall_achieved,
    }
}

/// Evaluates the full cost at one point of a run.
pub fn cost_point(
    reviewed_pos: usize,
    reviewed_neg: usize,
    ranked_labels: &[bool],
    total_pos: usize,
    target: f64,
    costs: &CostStructure,
) -> Result<CostPoint> {
    let penalty = phase2_penalty(ranked_labels, reviewed_pos, total_pos, target, costs)?;
    let phase2_found = ranked_labels[..penalty.depth]
        .iter()
        .filter(|&&p| p)
        .count();
    Ok(total_cost(
        reviewed_pos,
        reviewed_neg,
        total_pos,
        penalty,
        phase2_found,
        costs,
    ))
}

/// Cost of reviewing a random `target` fraction of the collection at unit cost.
pub fn manual_review_baseline(n_docs: usize, target: f64) -> f64 {
    ceil_fraction(target, n_docs) as f64
}
