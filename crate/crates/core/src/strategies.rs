//! Batch selection from the unreviewed pool.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{cmp_ranked, Model};
use crate::corpus::SparseVector;
use crate::{DocId, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Random,
    Uncertainty,
    Relevance,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Random, Strategy::Uncertainty, Strategy::Relevance];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Uncertainty => "uncertainty",
            Strategy::Relevance => "relevance",
        }
    }

    /// Picks up to `k` documents from a pool already scored by the current model.
    ///
    /// `scored` holds `(doc_id, linear score)` pairs; only the random
    /// strategy consumes `rng`.
    pub fn select<R: Rng + ?Sized>(
        self,
        scored: &[(DocId, f64)],
        k: usize,
        rng: &mut R,
    ) -> Result<Vec<DocId>> {
        match self {
            Strategy::Random => {
                let ids: Vec<DocId> = scored.iter().map(|&(id, _)| id).collect();
                select_random(&ids, k, rng)
            }
            Strategy::Uncertainty => select_uncertainty_scored(scored, k),
            Strategy::Relevance => select_relevance_scored(scored, k),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Strategy::Random),
            "uncertainty" => Ok(Strategy::Uncertainty),
            "relevance" => Ok(Strategy::Relevance),
            other => Err(Error::InvalidConfig(format!("unknown strategy `{other}`"))),
        }
    }
}

fn check(pool_len: usize, k: usize) -> Result<usize> {
    if pool_len == 0 {
        return Err(Error::PoolExhausted);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("batch size must be >= 1".into()));
    }
    Ok(k.min(pool_len))
}

/// Uniform sample of `min(k, |pool|)` distinct documents.
pub fn select_random<R: Rng + ?Sized>(pool: &[DocId], k: usize, rng: &mut R) -> Result<Vec<DocId>> {
    let k = check(pool.len(), k)?;
    Ok(rand::seq::index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect())
}

/// Documents whose probability is closest to 0.5, i.e. smallest `|score|`.
pub fn select_uncertainty_scored(scored: &[(DocId, f64)], k: usize) -> Result<Vec<DocId>> {
    let k = check(scored.len(), k)?;
    let mut by_margin: Vec<(DocId, f64)> = scored.iter().map(|&(id, s)| (id, -s.abs())).collect();
    Ok(top_k(&mut by_margin, k))
}

/// Highest-scoring documents.
pub fn select_relevance_scored(scored: &[(DocId, f64)], k: usize) -> Result<Vec<DocId>> {
    let k = check(scored.len(), k)?;
    let mut v = scored.to_vec();
    Ok(top_k(&mut v, k))
}

fn top_k(v: &mut [(DocId, f64)], k: usize) -> Vec<DocId> {
    if k < v.len() {
        v.select_nth_unstable_by(k - 1, cmp_ranked);
    }
    let head = &mut v[..k];
    head.sort_by(cmp_ranked);
    head.iter().map(|&(id, _)| id).collect()
}

fn score_pool<'a, I>(model: &Model, pool: I) -> Vec<(DocId, f64)>
where
    I: IntoIterator<Item = (DocId, &'a SparseVector)>,
{
    pool.into_iter()
        .map(|(id, f)| (id, model.score(f)))
        .collect()
}

pub fn select_uncertainty<'a, I>(model: &Model, pool: I, k: usize) -> Result<Vec<DocId>>
where
    I: IntoIterator<Item = (DocId, &'a SparseVector)>,
{
    select_uncertainty_scored(&score_pool(model, pool), k)
}

pub fn select_relevance<'a, I>(model: &Model, pool: I, k: usize) -> Result<Vec<DocId>>
where
    I: IntoIterator<Item = (DocId, &'a SparseVector)>,
{
    select_relevance_scored(&score_pool(model, pool), k)
}

#[cfg(test)]
mod tests {
    use super::Strategy;
    use super::*;
    use crate::classifier::{rank_scored, sigmoid};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn logit(p: f64) -> f64 {
        (p / (1.0 - p)).ln()
    }

    #[test]
    fn random_truncates_and_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(select_random(&[42], 100, &mut rng).unwrap(), vec![42]);
        let pool: Vec<DocId> = (1..=10).collect();
        let a = select_random(&pool, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = select_random(&pool, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        let mut sorted = a.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 3);
    }

    #[test]
    fn random_is_uniform() {
        let pool: Vec<DocId> = (1..=10).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = [0usize; 10];
        for _ in 0..10_000 {
            let pick = select_random(&pool, 1, &mut rng).unwrap();
            counts[(pick[0] - 1) as usize] += 1;
        }
        // binomial(10000, 0.1): sd = 30
        let sd = (10_000.0f64 * 0.1 * 0.9).sqrt();
        for c in counts {
            assert!((c as f64 - 1000.0).abs() <= 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn empty_pool_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            select_random(&[], 5, &mut rng),
            Err(Error::PoolExhausted)
        ));
        assert!(matches!(
            select_uncertainty_scored(&[], 5),
            Err(Error::PoolExhausted)
        ));
        assert!(matches!(
            select_relevance_scored(&[], 5),
            Err(Error::PoolExhausted)
        ));
    }

    #[test]
    fn uncertainty_picks_closest_to_half() {
        let scored = [
            (1, logit(0.95)),
            (2, logit(0.52)),
            (3, logit(0.08)),
            (4, logit(0.49)),
        ];
        let mut got = select_uncertainty_scored(&scored, 2).unwrap();
        got.sort();
        assert_eq!(got, vec![2, 4]);
        let tied = [(5, 0.0), (3, 0.0), (8, 0.0)];
        assert_eq!(select_uncertainty_scored(&tied, 2).unwrap(), vec![3, 5]);
    }

    #[test]
    fn relevance_picks_top() {
        let scored = [(1, logit(0.9)), (2, logit(0.2)), (3, logit(0.6))];
        assert_eq!(select_relevance_scored(&scored, 2).unwrap(), vec![1, 3]);
        assert_eq!(select_relevance_scored(&scored, 3).unwrap().len(), 3);
    }

    #[test]
    fn model_entry_points_agree_with_scored() {
        let f1 = SparseVector::from_pairs([(0, 1.0)]);
        let f2 = SparseVector::from_pairs([(1, 1.0)]);
        let model = Model {
            intercept: 0.1,
            weights: [(0, 2.0), (1, -0.2)].into_iter().collect(),
        };
        let pool = [(10, &f1), (11, &f2)];
        assert_eq!(select_relevance(&model, pool, 1).unwrap(), vec![10]);
        assert_eq!(select_uncertainty(&model, pool, 1).unwrap(), vec![11]);
    }

    #[test]
    fn strategy_names_parse() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("committee".parse::<Strategy>().is_err());
    }

    proptest! {
        #[test]
        fn uncertainty_matches_brute_force(
            scores in proptest::collection::vec(-8.0f64..8.0, 1..60),
            k in 1usize..70,
        ) {
            let scored: Vec<(DocId, f64)> =
                scores.iter().enumerate().map(|(i, &s)| (i as DocId * 3 + 1, s)).collect();
            let mut brute = scored.clone();
            brute.sort_by(|a, b| {
                let da = (sigmoid(a.1) - 0.5).abs();
                let db = (sigmoid(b.1) - 0.5).abs();
                da.total_cmp(&db).then(a.0.cmp(&b.0))
            });
            let mut expect: Vec<DocId> = brute.iter().take(k).map(|x| x.0).collect();
            let mut got = select_uncertainty_scored(&scored, k).unwrap();
            prop_assert_eq!(got.len(), k.min(scored.len()));
            expect.sort();
            got.sort();
            prop_assert_eq!(got, expect);
        }

        #[test]
        fn relevance_is_prefix_of_rank(
            scores in proptest::collection::vec(-8.0f64..8.0, 1..60),
            k in 1usize..70,
        ) {
            let scored: Vec<(DocId, f64)> =
                scores.iter().enumerate().map(|(i, &s)| (100 - i as DocId, s)).collect();
            let full = rank_scored(scored.clone());
            let top = select_relevance_scored(&scored, k).unwrap();
            prop_assert_eq!(&top[..], &full[..k.min(full.len())]);
        }
    }
}
