//! Labeled corpora: documents, topics and the datasets that hold them.

mod annotation;
mod formats;
mod text;

use std::collections::{BTreeMap, HashMap};

use crate::{DocId, Error, Result};

pub use annotation::{aggregate_label, AnnotationRecord};
pub use formats::{
    askfm_records, load_dataset, read_canonical, wikipedia_records, write_canonical, Format,
    ASKFM_ROLES, WIKIPEDIA_CLASSES,
};
pub use text::{featurize, featurize_frozen, is_separator, tokenize, SparseVector, Vocabulary};

/// One line of the canonical interchange format.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalRecord {
    pub doc_id: DocId,
    pub text: String,
    pub labels: BTreeMap<String, u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub doc_id: DocId,
    pub text: String,
    pub features: SparseVector,
}

/// A binary classification over every document of a dataset.
///
/// `labels[i]` belongs to the dataset's `i`-th document.
#[derive(Clone, Debug, PartialEq)]
pub struct Topic {
    pub name: String,
    labels: Vec<bool>,
    positives: usize,
}

impl Topic {
    pub fn new(name: impl Into<String>, labels: Vec<bool>) -> Self {
        let positives = labels.iter().filter(|&&l| l).count();
        Topic {
            name: name.into(),
            labels,
            positives,
        }
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn is_positive(&self, index: usize) -> bool {
        self.labels[index]
    }

    pub fn positives(&self) -> usize {
        self.positives
    }

    pub fn negatives(&self) -> usize {
        self.labels.len() - self.positives
    }

    /// A seed set needs one document of each class.
    pub fn is_usable(&self) -> bool {
        self.positives > 0 && self.negatives() > 0
    }

    pub fn prevalence(&self) -> f64 {
        prevalence(self)
    }
}

/// Exact fraction of positive documents.
pub fn prevalence(topic: &Topic) -> f64 {
    if topic.labels.is_empty() {
        return 0.0;
    }
    topic.positives as f64 / topic.labels.len() as f64
}

/// Immutable collection of featurized documents, sorted by `doc_id`, and
/// the topics defined over them.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    documents: Vec<Document>,
    topics: Vec<Topic>,
    vocabulary: Vocabulary,
    index: HashMap<DocId, usize>,
}

impl Dataset {
    /// Builds a dataset from canonical records. Record `i` is reported as line `i + 1`.
    ///
    /// Every record must carry the same topic names; topics are ordered by name.
    pub fn from_records(
        name: impl Into<String>,
        mut records: Vec<CanonicalRecord>,
    ) -> Result<Self> {
        let topic_names: Vec<String> = match records.first() {
            Some(r) => r.labels.keys().cloned().collect(),
            None => Vec::new(),
        };
        for (i, rec) in records.iter().enumerate() {
            if !rec.labels.keys().eq(topic_names.iter()) {
                return Err(Error::schema(
                    i + 1,
                    format!(
                        "document {} has a different topic set than line 1",
                        rec.doc_id
                    ),
                ));
            }
            if let Some((topic, v)) = rec.labels.iter().find(|(_, &v)| v > 1) {
                return Err(Error::schema(
                    i + 1,
                    format!("label for topic `{topic}` must be 0 or 1, got {v}"),
                ));
            }
        }
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by_key(|&i| records[i].doc_id);
        for pair in order.windows(2) {
            if records[pair[0]].doc_id == records[pair[1]].doc_id {
                return Err(Error::schema(
                    pair[0].max(pair[1]) + 1,
                    format!("duplicate doc_id {}", records[pair[1]].doc_id),
                ));
            }
        }
        records.sort_by_key(|r| r.doc_id);

        let mut vocabulary = Vocabulary::new();
        let mut documents = Vec::with_capacity(records.len());
        let mut topic_labels = vec![Vec::with_capacity(records.len()); topic_names.len()];
        for rec in records {
            let features = featurize(&tokenize(&rec.text), &mut vocabulary);
            for (labels, &v) in topic_labels.iter_mut().zip(rec.labels.values()) {
                labels.push(v == 1);
            }
            documents.push(Document {
                doc_id: rec.doc_id,
                text: rec.text,
                features,
            });
        }
        let topics = topic_names
            .into_iter()
            .zip(topic_labels)
            .map(|(name, labels)| Topic::new(name, labels))
            .collect();
        let index = documents
            .iter()
            .enumerate()
            .map(|(i, d)| (d.doc_id, i))
            .collect();
        Ok(Dataset {
            name: name.into(),
            documents,
            topics,
            vocabulary,
            index,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn topics(&self) -> &[Topic] {
        &self.topics
    }

    pub fn topic(&self, name: &str) -> Option<&Topic> {
        self.topics.iter().find(|t| t.name == name)
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    /// Position of `doc_id` in [`Dataset::documents`].
    pub fn position(&self, doc_id: DocId) -> Option<usize> {
        self.index.get(&doc_id).copied()
    }

    pub fn document(&self, doc_id: DocId) -> Option<&Document> {
        self.position(doc_id).map(|i| &self.documents[i])
    }

    /// Names of topics a workflow cannot start on.
    pub fn unusable_topics(&self) -> Vec<&str> {
        self.topics
            .iter()
            .filter(|t| !t.is_usable())
            .map(|t| t.name.as_str())
            .collect()
    }

    /// Converts back to canonical records, in `doc_id` order.
    pub fn to_records(&self) -> Vec<CanonicalRecord> {
        self.documents
            .iter()
            .enumerate()
            .map(|(i, d)| CanonicalRecord {
                doc_id: d.doc_id,
                text: d.text.clone(),
                labels: self
                    .topics
                    .iter()
                    .map(|t| (t.name.clone(), u8::from(t.labels[i])))
                    .collect(),
            })
            .collect()
    }
}
