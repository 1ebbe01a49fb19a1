//! Replicate statistics: Student-t confidence intervals and t-tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t_stat: f64,
    pub p_raw: f64,
    pub significant: bool,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n − 1 denominator).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

fn students_t(df: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, df).expect("degrees of freedom are positive")
}

/// Two-sided critical value `t_{1-(1-confidence)/2, df}`.
pub fn t_critical(confidence: f64, df: f64) -> f64 {
    students_t(df).inverse_cdf(1.0 - (1.0 - confidence) / 2.0)
}

fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    (2.0 * students_t(df).cdf(-t.abs())).min(1.0)
}

/// `mean ± t · s / √n`.
pub fn mean_ci(costs: &[f64], confidence: f64) -> Result<ConfidenceInterval> {
    if costs.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: costs.len(),
        });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "confidence must be in (0, 1), got {confidence}"
        )));
    }
    let n = costs.len() as f64;
    let m = mean(costs);
    let sd = variance(costs).sqrt();
    if sd == 0.0 {
        return Ok(ConfidenceInterval {
            mean: m,
            low: m,
            high: m,
        });
    }
    let half = t_critical(confidence, n - 1.0) * sd / n.sqrt();
    Ok(ConfidenceInterval {
        mean: m,
        low: m - half,
        high: m + half,
    })
}

/// t statistic that also covers zero-variance samples.
fn t_from(mean_diff: f64, std_err: f64) -> f64 {
    if std_err > 0.0 {
        mean_diff / std_err
    } else if mean_diff == 0.0 {
        0.0
    } else {
        mean_diff.signum() * f64::INFINITY
    }
}

/// Paired t-test on `a − b`, significant when `p ≤ 0.01 / n_tests`.
pub fn paired_t_bonferroni(a: &[f64], b: &[f64], n_tests: usize) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: a.len(),
        });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let t = t_from(mean(&d), (variance(&d) / n).sqrt());
    let p = two_sided_p(t, n - 1.0);
    Ok(TTest {
        t_stat: t,
        p_raw: p,
        significant: p <= bonferroni_alpha(n_tests),
    })
}

/// Welch's unequal-variance t-test on `a` versus `b`.
pub fn welch_t(a: &[f64], b: &[f64], n_tests: usize) -> Result<TTest> {
    for xs in [a, b] {
        if xs.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: xs.len(),
            });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let t = t_from(mean(a) - mean(b), (va + vb).sqrt());
    let df = if va + vb > 0.0 {
        (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0))
    } else {
        na + nb - 2.0
    };
    let p = two_sided_p(t, df);
    Ok(TTest {
        t_stat: t,
        p_raw: p,
        significant: p <= bonferroni_alpha(n_tests),
    })
}

fn bonferroni_alpha(n_tests: usize) -> f64 {
    0.01 / n_tests.max(1) as f64
}

/// Percent reduction of `candidate` relative to `baseline`; negative when worse.
pub fn relative_reduction(candidate_mean: f64, baseline_mean: f64) -> f64 {
    100.0 * (baseline_mean - candidate_mean) / baseline_mean
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_variance_interval() {
        let ci = mean_ci(&[10.0, 10.0, 10.0], 0.99).unwrap();
        assert_eq!((ci.mean, ci.low, ci.high), (10.0, 10.0, 10.0));
    }

    #[test]
    fn symmetric_interval() {
        let ci = mean_ci(&[0.0, 20.0], 0.99).unwrap();
        assert_eq!(ci.mean, 10.0);
        assert!(((ci.high - 10.0) - (10.0 - ci.low)).abs() < 1e-9);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            mean_ci(&[1.0], 0.99),
            Err(Error::InsufficientSamples { .. })
        ));
        assert!(paired_t_bonferroni(&[1.0], &[2.0], 1).is_err());
    }

    #[test]
    fn t_table_value() {
        // t_{0.995, 19} = 2.861 in printed tables
        let t = t_critical(0.99, 19.0);
        assert!((t - 2.861).abs() < 5e-4, "{t}");
        // s = 5 over n = 20
        let xs: Vec<f64> = (0..20)
            .map(|i| if i % 2 == 0 { 5.0 } else { -5.0 })
            .collect();
        let s = variance(&xs).sqrt();
        let ci = mean_ci(&xs.iter().map(|x| x * 5.0 / s).collect::<Vec<_>>(), 0.99).unwrap();
        assert!(((ci.high - ci.low) / 2.0 - 3.199).abs() < 1e-3);
    }

    #[test]
    fn paired_identical_is_zero() {
        let a = [1.0, 2.0, 3.0];
        let r = paired_t_bonferroni(&a, &a, 1).unwrap();
        assert_eq!(r.t_stat, 0.0);
        assert!(!r.significant);
        assert_eq!(r.p_raw, 1.0);
    }

    #[test]
    fn paired_large_shift_significant() {
        let b: Vec<f64> = (0..20).map(|i| 100.0 + i as f64).collect();
        let a: Vec<f64> = b
            .iter()
            .enumerate()
            .map(|(i, x)| x - 5.0 + 1e-3 * ((i * 7 % 5) as f64))
            .collect();
        let r = paired_t_bonferroni(&a, &b, 72).unwrap();
        assert!(r.t_stat < -100.0);
        assert!(r.significant);
    }

    #[test]
    fn paired_matches_manual_computation() {
        let a = [
            12.1, 14.3, 11.8, 15.2, 13.3, 12.9, 16.4, 11.1, 13.7, 14.8, 12.2, 15.9, 13.1, 14.4,
            12.6, 13.9, 15.5, 11.9, 14.1, 13.4,
        ];
        let b = [
            13.4, 14.1, 12.9, 15.0, 14.8, 13.2, 16.1, 12.7, 14.5, 14.6, 13.9, 16.3, 13.0, 15.8,
            13.1, 14.2, 16.0, 12.8, 14.9, 13.3,
        ];
        // spreadsheet-style: mean and sd of the differences, by hand
        let mut sum = 0.0;
        for i in 0..20 {
            sum += a[i] - b[i];
        }
        let md = sum / 20.0;
        let mut ss = 0.0f64;
        for i in 0..20 {
            let e = a[i] - b[i] - md;
            ss += e * e;
        }
        let sd = (ss / 19.0).sqrt();
        let expected = md / (sd / 20f64.sqrt());
        let r = paired_t_bonferroni(&a, &b, 1).unwrap();
        assert!((r.t_stat - expected).abs() < 1e-9);
        let swapped = paired_t_bonferroni(&b, &a, 1).unwrap();
        assert!((swapped.t_stat + r.t_stat).abs() < 1e-12);
        assert!((swapped.p_raw - r.p_raw).abs() < 1e-15);
    }

    #[test]
    fn paired_length_mismatch() {
        assert!(matches!(
            paired_t_bonferroni(&[1.0, 2.0], &[1.0], 1),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
    }

    #[test]
    fn welch_basic() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [11.0, 12.5, 13.0, 14.5];
        let r = welch_t(&a, &b, 1).unwrap();
        assert!(r.t_stat < 0.0 && r.p_raw < 0.01);
        let same = welch_t(&a, &a, 1).unwrap();
        assert_eq!(same.t_stat, 0.0);
    }

    #[test]
    fn reductions() {
        assert!((relative_reduction(29387.06, 47805.25) - 38.53).abs() < 0.005);
        assert_eq!(relative_reduction(5.0, 5.0), 0.0);
        assert!((relative_reduction(110.0, 100.0) + 10.0).abs() < 1e-12);
    }
}
