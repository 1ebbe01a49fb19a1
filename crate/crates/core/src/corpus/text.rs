//! Tokenization and log-tf featurization.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use unicode_general_category::get_general_category;

/// Sparse non-negative feature vector, sorted by term id with no repeats.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector(Vec<(u32, f64)>);

impl SparseVector {
    pub fn new() -> Self {
        SparseVector(Vec::new())
    }

    /// Builds a vector from arbitrary `(term, value)` pairs. Repeated terms are summed.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut merged: BTreeMap<u32, f64> = BTreeMap::new();
        for (term, value) in pairs {
            *merged.entry(term).or_insert(0.0) += value;
        }
        SparseVector(merged.into_iter().collect())
    }

    pub fn get(&self, term: u32) -> Option<f64> {
        self.0
            .binary_search_by_key(&term, |&(t, _)| t)
            .ok()
            .map(|i| self.0[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[(u32, f64)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Dense, insertion-ordered mapping between term strings and ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, term: &str) -> Option<u32> {
        self.ids.get(term).copied()
    }

    pub fn get_or_insert(&mut self, term: &str) -> u32 {
        if let Some(&id) = self.ids.get(term) {
            return id;
        }
        let id = u32::try_from(self.terms.len()).expect("vocabulary exceeds u32 ids");
        self.terms.push(term.to_owned());
        self.ids.insert(term.to_owned(), id);
        id
    }

    pub fn term(&self, id: u32) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// Whitespace, Unicode punctuation (P*) and symbols (S*) all separate tokens.
pub fn is_separator(c: char) -> bool {
    if c.is_whitespace() || c.is_ascii_punctuation() {
        return true;
    }
    matches!(
        get_general_category(c).abbreviation().as_bytes()[0],
        b'P' | b'S'
    )
}

/// Splits on whitespace and punctuation, dropping separators and empty
/// tokens, and lowercases what remains.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(is_separator)
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn log_tf(tf: u32) -> f64 {
    1.0 + f64::from(tf).ln()
}

/// Log-tf features, adding unseen terms to `vocab`.
pub fn featurize<S: AsRef<str>>(tokens: &[S], vocab: &mut Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for tok in tokens {
        *counts.entry(vocab.get_or_insert(tok.as_ref())).or_insert(0) += 1;
    }
    SparseVector(counts.into_iter().map(|(t, tf)| (t, log_tf(tf))).collect())
}

/// Log-tf features against a frozen vocabulary; out-of-vocabulary terms are ignored.
pub fn featurize_frozen<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for tok in tokens {
        if let Some(id) = vocab.get(tok.as_ref()) {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    SparseVector(counts.into_iter().map(|(t, tf)| (t, log_tf(tf))).collect())
}
