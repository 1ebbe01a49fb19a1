//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero if any criterion fails.
//!
//! The real-corpus criteria run only when the corpora are available:
//! `TARSIM_WIKIPEDIA_DIR` (directory with the two attack TSV files) and
//! `TARSIM_ASKFM_PATH` (ASKfm pair CSV).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tarsim_core::classifier::{loss_and_gradient, Example, Model};
use tarsim_core::corpus::{load_dataset, Dataset, Format, SparseVector};
use tarsim_core::cost::{manual_review_baseline, phase2_penalty, CostStructure};
use tarsim_core::experiment::{
    mean, paired_t_bonferroni, relative_reduction, run_plan, write_outputs, ExperimentPlan,
    OutputOptions, PlanOutput, Schedule,
};
use tarsim_core::strategies::Strategy;
use tarsim_core::synthetic::{generate, SyntheticConfig};
use tarsim_core::workflow::{run_tar, WorkflowConfig};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

struct Suite {
    failures: usize,
}

impl Suite {
    fn check(&mut self, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let over = budget.is_some_and(|b| elapsed > b);
        let (tag, detail) = match outcome {
            Outcome::Pass(d) if over => ("FAIL", format!("{d}; exceeded time budget {budget:?}")),
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => ("FAIL", d),
            Outcome::Skip(d) => ("SKIP", d),
        };
        if tag == "FAIL" {
            self.failures += 1;
        }
        println!("[{tag}] {name} ({:.2?}): {detail}", elapsed);
    }
}

fn pass_if(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn baseline_arithmetic() -> Outcome {
    let got = manual_review_baseline(115_737, 0.8);
    pass_if(got == 92_590.0, format!("manual baseline = {got}"))
}

fn training_count_grid() -> Outcome {
    let ds = generate(&SyntheticConfig {
        n_docs: 8_500,
        n_positive: 400,
        n_noise_terms: 300,
        doc_len: (3, 6),
        seed: 1,
        ..SyntheticConfig::separable()
    });
    let mut cfg = WorkflowConfig::new(Strategy::Random, 100, 80, 42);
    cfg.train_config.max_epochs = 3;
    let run = match run_tar(&ds, &ds.topics()[0], &cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let got: Vec<usize> = [2usize, 10, 20, 30, 40, 50, 60, 70, 80]
        .iter()
        .map(|&i| run.records[i].reviewed)
        .collect();
    let want = vec![202, 1002, 2002, 3002, 4002, 5002, 6002, 7002, 8002];
    pass_if(
        got == want && run.records.len() == 81,
        format!("reviewed at checkpoints {got:?}"),
    )
}

/// Minimum depth by direct scan; required count is the least `r` whose
/// ratio reaches the target.
fn penalty_oracle(
    labels: &[bool],
    found: usize,
    total: usize,
    target: f64,
    costs: &CostStructure,
) -> (f64, usize) {
    let required = (0..=total)
        .find(|&r| r as f64 / total as f64 >= target)
        .expect("r = total always qualifies");
    let mut have = found;
    let mut cost = 0.0;
    let mut depth = 0;
    for &l in labels {
        if have >= required {
            break;
        }
        depth += 1;
        if l {
            have += 1;
            cost += costs.c_phase2_pos;
        } else {
            cost += costs.c_phase2_neg;
        }
    }
    (cost, depth)
}

fn penalty_oracle_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2021);
    let mut mismatches = 0;
    let mut nonzero = 0;
    for case in 0..1000 {
        let len = rng.random_range(1..=500);
        let density: f64 = rng.random();
        let labels: Vec<bool> = (0..len).map(|_| rng.random_bool(density)).collect();
        let remaining = labels.iter().filter(|&&l| l).count();
        let found = rng.random_range(0..=remaining.max(1) * 2);
        let total = found + remaining;
        if total == 0 {
            continue;
        }
        let target = 1.0 - rng.random::<f64>();
        let costs = if case % 2 == 0 {
            CostStructure::default()
        } else {
            CostStructure {
                c_train_pos: rng.random(),
                c_train_neg: rng.random(),
                c_phase2_pos: rng.random_range(0.0..5.0),
                c_phase2_neg: rng.random_range(0.0..5.0),
            }
        };
        let expected = penalty_oracle(&labels, found, total, target, &costs);
        match phase2_penalty(&labels, found, total, target, &costs) {
            Ok(p) if (p.cost, p.depth) == expected => nonzero += usize::from(p.depth > 0),
            _ => mismatches += 1,
        }
    }
    pass_if(
        mismatches == 0,
        format!("{mismatches} mismatches over 1000 instances ({nonzero} with positive depth)"),
    )
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-6;
    let lambda = 1e-2;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n_terms = rng.random_range(2..30u32);
        let n = rng.random_range(2..40);
        let feats: Vec<SparseVector> = (0..n)
            .map(|_| {
                let k = rng.random_range(1..6);
                SparseVector::from_pairs((0..k).map(|_| {
                    (
                        rng.random_range(0..n_terms),
                        1.0 + rng.random::<f64>() * 2.0,
                    )
                }))
            })
            .collect();
        let examples: Vec<Example<'_>> = feats
            .iter()
            .map(|f| Example::new(f, rng.random_bool(0.4)))
            .collect();
        let model = Model {
            intercept: rng.random_range(-1.0..1.0),
            weights: (0..n_terms)
                .filter_map(|t| match rng.random_bool(0.7) {
                    true => Some((t, rng.random_range(-1.5..1.5))),
                    false => None,
                })
                .collect(),
        };
        let (_, grad) = loss_and_gradient(&model, &examples, lambda);
        let scores: Vec<f64> = feats
            .iter()
            .map(|f| model.intercept + f.iter().map(|(t, x)| model.weight(t) * x).sum::<f64>())
            .collect();
        // Central difference in parameter `term` (None = intercept). Each
        // term ln(1+e^(a+d)) - ln(1+e^(a-d)) is evaluated in closed form so
        // the quotient is not swamped by cancellation between two losses.
        let central = |term: Option<u32>| {
            let mut diff = 0.0;
            for ((f, ex), &z) in feats.iter().zip(&examples).zip(&scores) {
                let x = match term {
                    None => 1.0,
                    Some(t) => f.get(t).unwrap_or(0.0),
                };
                if x == 0.0 {
                    continue;
                }
                let y = if ex.positive { 1.0 } else { -1.0 };
                let (a, d) = (-y * z, -y * h * x);
                let two_sinh = d.exp_m1() - (-d).exp_m1();
                diff += (a.exp() * two_sinh / (1.0 + (a - d).exp())).ln_1p();
            }
            diff /= examples.len() as f64;
            if let Some(t) = term {
                diff += 2.0 * lambda * model.weight(t) * h;
            }
            diff / (2.0 * h)
        };
        let rel = |a: f64, b: f64| {
            let scale = a.abs().max(b.abs());
            if scale < 1e-10 {
                0.0
            } else {
                (a - b).abs() / scale
            }
        };
        worst = worst.max(rel(grad.intercept, central(None)));
        for (&t, &g) in &grad.weights {
            worst = worst.max(rel(g, central(Some(t))));
        }
    }
    pass_if(worst <= 1e-5, format!("max relative error {worst:.3e}"))
}

fn synthetic_plan() -> ExperimentPlan {
    ExperimentPlan {
        schedules: vec![Schedule {
            batch_size: 50,
            iterations: 20,
        }],
        n_replicates: 20,
        recall_target: 0.8,
        base_seed: 2021,
        ..ExperimentPlan::default()
    }
}

fn synthetic_corpus() -> Dataset {
    generate(&SyntheticConfig {
        seed: 5,
        ..SyntheticConfig::noisy()
    })
}

/// (topic, replicate) → total cost at `iteration`.
fn costs_at(
    out: &PlanOutput,
    strategy: Strategy,
    iteration: usize,
) -> BTreeMap<(String, usize), f64> {
    out.runs
        .iter()
        .filter(|r| r.result.config.strategy == strategy)
        .map(|r| {
            (
                (r.result.topic.clone(), r.replicate),
                r.result.records[iteration].cost.total,
            )
        })
        .collect()
}

fn directional(out: &PlanOutput) -> Outcome {
    let random = costs_at(out, Strategy::Random, 20);
    let unc = costs_at(out, Strategy::Uncertainty, 20);
    let rel = costs_at(out, Strategy::Relevance, 20);
    if random.len() != 20 || unc.len() != 20 || !random.keys().eq(unc.keys()) {
        return Outcome::Fail("runs are not paired".into());
    }
    let a: Vec<f64> = unc.values().copied().collect();
    let b: Vec<f64> = random.values().copied().collect();
    let t = match paired_t_bonferroni(&a, &b, 2) {
        Ok(t) => t,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let (mu, mr) = (mean(&a), mean(&b));
    let mrel = mean(&rel.values().copied().collect::<Vec<_>>());
    pass_if(
        mu < mr && t.significant,
        format!(
            "mean cost random {mr:.1}, uncertainty {mu:.1} ({:.2}% reduction), relevance {mrel:.1}; t = {:.2}, p = {:.2e}",
            relative_reduction(mu, mr),
            t.t_stat,
            t.p_raw
        ),
    )
}

fn dominates_manual(out: &PlanOutput, n_docs: usize) -> Outcome {
    let manual = manual_review_baseline(n_docs, 0.8);
    let mut parts = Vec::new();
    let mut ok = true;
    for s in Strategy::ALL {
        let costs: Vec<f64> = costs_at(out, s, 10).into_values().collect();
        let m = mean(&costs);
        let worst = costs.iter().cloned().fold(f64::MIN, f64::max);
        ok &= m < manual;
        parts.push(format!("{s} mean {m:.1} (max {worst:.0})"));
    }
    pass_if(
        ok,
        format!("manual {manual}; at iteration 10: {}", parts.join(", ")),
    )
}

fn determinism(ds: &Dataset, plan: &ExperimentPlan, first: &PlanOutput) -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let opts = OutputOptions::default();
    let mut outputs = Vec::new();
    for (label, out) in [
        ("jobs1", Ok(first.clone())),
        ("jobs8a", run_plan(ds, plan, 8)),
        ("jobs8b", run_plan(ds, plan, 8)),
    ] {
        let out = match out {
            Ok(o) => o,
            Err(e) => return Outcome::Fail(e.to_string()),
        };
        let path = dir.path().join(label);
        if let Err(e) = write_outputs(&path, plan, &out, &opts) {
            return Outcome::Fail(e.to_string());
        }
        let read = |f: &str| std::fs::read(path.join(f)).unwrap_or_default();
        outputs.push((read("runs.csv"), read("summary.csv")));
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    pass_if(
        same && !outputs[0].0.is_empty(),
        format!(
            "runs.csv {} bytes, summary.csv {} bytes, identical across jobs 1/8/8: {same}",
            outputs[0].0.len(),
            outputs[0].1.len()
        ),
    )
}

fn env_path(var: &str) -> Option<PathBuf> {
    std::env::var_os(var)
        .map(PathBuf::from)
        .filter(|p| p.exists())
}

fn wikipedia_corpus_checks() -> Outcome {
    let Some(dir) = env_path("TARSIM_WIKIPEDIA_DIR") else {
        return Outcome::Skip("TARSIM_WIKIPEDIA_DIR not set".into());
    };
    let ds = match load_dataset(&dir, Format::WikipediaAttack) {
        Ok(d) => d,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let prev: Vec<f64> = ds.topics().iter().map(|t| t.prevalence()).collect();
    let in_range = prev
        .iter()
        .all(|&p| (0.0018 - 5e-4..=0.1344 + 5e-4).contains(&p));
    pass_if(
        ds.len() == 115_737 && ds.topics().len() == 4 && in_range,
        format!("{} documents, prevalences {prev:?}", ds.len()),
    )
}

fn askfm_corpus_checks() -> Outcome {
    let Some(path) = env_path("TARSIM_ASKFM_PATH") else {
        return Outcome::Skip("TARSIM_ASKFM_PATH not set".into());
    };
    let ds = match load_dataset(&path, Format::Askfm) {
        Ok(d) => d,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let prev: Vec<f64> = ds.topics().iter().map(|t| t.prevalence()).collect();
    let in_range = prev
        .iter()
        .all(|&p| (0.0004 - 5e-4..=0.0463 + 5e-4).contains(&p));
    pass_if(
        ds.len() == 61_232 && ds.topics().len() == 23 && in_range,
        format!("{} documents, {} topics", ds.len(), ds.topics().len()),
    )
}

fn wikipedia_attack_reduction() -> Outcome {
    let Some(dir) = env_path("TARSIM_WIKIPEDIA_DIR") else {
        return Outcome::Skip("TARSIM_WIKIPEDIA_DIR not set".into());
    };
    let ds = match load_dataset(&dir, Format::WikipediaAttack) {
        Ok(d) => d,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let plan = ExperimentPlan {
        topics: Some(vec!["Attack".into()]),
        strategies: vec![Strategy::Random, Strategy::Uncertainty],
        schedules: vec![Schedule {
            batch_size: 100,
            iterations: 80,
        }],
        base_seed: 2021,
        ..ExperimentPlan::default()
    };
    let out = match run_plan(&ds, &plan, 0) {
        Ok(o) => o,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let r = mean(
        &costs_at(&out, Strategy::Random, 80)
            .into_values()
            .collect::<Vec<_>>(),
    );
    let u = mean(
        &costs_at(&out, Strategy::Uncertainty, 80)
            .into_values()
            .collect::<Vec<_>>(),
    );
    let red = relative_reduction(u, r);
    pass_if(
        red >= 30.0,
        format!("8002 reviewed: random {r:.1}, uncertainty {u:.1}, reduction {red:.2}%"),
    )
}

fn main() {
    let mut suite = Suite { failures: 0 };
    suite.check(
        "manual baseline arithmetic",
        Some(Duration::from_millis(1)),
        baseline_arithmetic,
    );
    suite.check(
        "training-count grid",
        Some(Duration::from_secs(1)),
        training_count_grid,
    );
    suite.check(
        "phase-two penalty oracle",
        Some(Duration::from_secs(5)),
        penalty_oracle_check,
    );
    suite.check(
        "gradient vs finite differences",
        Some(Duration::from_secs(10)),
        gradient_check,
    );

    let ds = synthetic_corpus();
    let plan = synthetic_plan();
    let start = Instant::now();
    let out = run_plan(&ds, &plan, 1);
    let plan_time = start.elapsed();
    match &out {
        Ok(out) => {
            suite.check("directional cost (synthetic)", None, || {
                let mut o = directional(out);
                if plan_time > Duration::from_secs(120) {
                    o = Outcome::Fail(format!("single-threaded plan took {plan_time:.2?}"));
                } else if let Outcome::Pass(d) = o {
                    o = Outcome::Pass(format!("{d}; single-threaded plan {plan_time:.2?}"));
                }
                o
            });
            suite.check(
                "all strategies beat manual review (synthetic)",
                None,
                || dominates_manual(out, ds.len()),
            );
            suite.check(
                "byte-identical outputs across jobs",
                Some(Duration::from_secs(120)),
                || determinism(&ds, &plan, out),
            );
        }
        Err(e) => {
            for name in [
                "directional cost (synthetic)",
                "all strategies beat manual review (synthetic)",
                "byte-identical outputs across jobs",
            ] {
                suite.check(name, None, || Outcome::Fail(format!("plan failed: {e}")));
            }
        }
    }

    suite.check("wikipedia corpus shape", None, wikipedia_corpus_checks);
    suite.check("askfm corpus shape", None, askfm_corpus_checks);
    suite.check(
        "wikipedia attack reduction >= 30%",
        Some(Duration::from_secs(3600)),
        wikipedia_attack_reduction,
    );

    if suite.failures > 0 {
        println!("{} acceptance criteria failed", suite.failures);
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
