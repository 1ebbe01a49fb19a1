//! Aggregation of per-annotator categorical labels into binary topic labels.

use crate::{DocId, Error, Result};

/// One document's annotations: each annotator picked exactly one class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub doc_id: DocId,
    labels: Vec<String>,
}

impl AnnotationRecord {
    /// `annotator_count` must equal the number of labels supplied.
    pub fn new(doc_id: DocId, labels: Vec<String>, annotator_count: usize) -> Result<Self> {
        if labels.len() != annotator_count {
            return Err(Error::InconsistentState(format!(
                "document {doc_id}: {} labels recorded for {annotator_count} annotators",
                labels.len()
            )));
        }
        Ok(AnnotationRecord { doc_id, labels })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn annotator_count(&self) -> usize {
        self.labels.len()
    }
}

/// Positive iff at least `threshold` annotators chose a class in
/// `positive_classes`. Every recorded label must belong to `classes`.
pub fn aggregate_label(
    record: &AnnotationRecord,
    classes: &[&str],
    positive_classes: &[&str],
    threshold: usize,
) -> Result<bool> {
    if threshold == 0 {
        return Err(Error::InvalidConfig(
            "aggregation threshold must be >= 1".into(),
        ));
    }
    let mut votes = 0;
    for label in &record.labels {
        if !classes.contains(&label.as_str()) {
            return Err(Error::UnknownClass {
                doc_id: record.doc_id,
                class: label.clone(),
            });
        }
        if positive_classes.contains(&label.as_str()) {
            votes += 1;
        }
    }
    Ok(votes >= threshold)
}
