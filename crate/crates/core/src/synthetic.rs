//! Synthetic labeled corpora with class-indicative terms plus noise.
//!
//! Documents are bags of background terms (`w<i>`, skewed so that low ids
//! are frequent). Positive documents additionally mention a few signal
//! terms (`s<i>`); negatives mention one with probability
//! `negative_signal_rate`, and `positive_dropout` of positives carry no
//! signal at all. The documents pass through the regular tokenizer and
//! featurizer.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CanonicalRecord, Dataset};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub n_docs: usize,
    pub n_positive: usize,
    pub n_signal_terms: usize,
    pub n_noise_terms: usize,
    pub doc_len: (usize, usize),
    pub signal_per_positive: (usize, usize),
    pub negative_signal_rate: f64,
    pub positive_dropout: f64,
    pub seed: u64,
    pub topic: String,
}

impl SyntheticConfig {
    /// Positives always carry signal, negatives never do. The signal
    /// vocabulary is small enough that positives share indicative terms.
    pub fn separable() -> Self {
        SyntheticConfig {
            n_docs: 200,
            n_positive: 20,
            n_signal_terms: 5,
            n_noise_terms: 500,
            doc_len: (8, 20),
            signal_per_positive: (1, 3),
            negative_signal_rate: 0.0,
            positive_dropout: 0.0,
            seed: 0,
            topic: "synthetic".into(),
        }
    }

    /// 5,000 documents at 5% prevalence with overlapping classes.
    pub fn noisy() -> Self {
        SyntheticConfig {
            n_docs: 5000,
            n_positive: 250,
            n_signal_terms: 150,
            n_noise_terms: 3000,
            doc_len: (10, 30),
            signal_per_positive: (1, 3),
            negative_signal_rate: 0.15,
            positive_dropout: 0.05,
            seed: 0,
            topic: "synthetic".into(),
        }
    }
}

/// Doc ids run from 1 to `n_docs`.
pub fn records(config: &SyntheticConfig) -> Vec<CanonicalRecord> {
    assert!(
        config.n_positive <= config.n_docs,
        "more positives than documents"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut positive = vec![false; config.n_docs];
    for i in sample(&mut rng, config.n_docs, config.n_positive) {
        positive[i] = true;
    }
    let mut out = Vec::with_capacity(config.n_docs);
    for (i, &is_pos) in positive.iter().enumerate() {
        let len = rng.random_range(config.doc_len.0..=config.doc_len.1);
        let mut tokens: Vec<String> = (0..len)
            .map(|_| {
                let u: f64 = rng.random();
                let id = ((u * u) * config.n_noise_terms as f64) as usize;
                format!("w{id}")
            })
            .collect();
        let n_signal = if is_pos {
            if rng.random_bool(config.positive_dropout) {
                0
            } else {
                rng.random_range(config.signal_per_positive.0..=config.signal_per_positive.1)
            }
        } else {
            usize::from(rng.random_bool(config.negative_signal_rate))
        };
        for _ in 0..n_signal {
            let id = rng.random_range(0..config.n_signal_terms.max(1));
            let at = rng.random_range(0..=tokens.len());
            tokens.insert(at, format!("s{id}"));
        }
        out.push(CanonicalRecord {
            doc_id: i as u64 + 1,
            text: tokens.join(" "),
            labels: [(config.topic.clone(), u8::from(is_pos))]
                .into_iter()
                .collect(),
        });
    }
    out
}

pub fn generate(config: &SyntheticConfig) -> Dataset {
    Dataset::from_records("synthetic", records(config)).expect("generated records are valid")
}
