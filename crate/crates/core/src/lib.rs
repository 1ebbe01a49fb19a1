//! Technology-assisted review (TAR) simulation for content moderation.
//!
//! The crate runs iterative active-learning review workflows against fully
//! labeled corpora and scores them with a two-phase cost model: the cost of
//! every document reviewed so far plus the cost of an ideal second-phase
//! review that lifts recall to a target using the most recent model.
//!
//! Modules are layered bottom-up:
//!
//! - [`corpus`]: tokenization, log-tf features, annotation aggregation and
//!   dataset loading (canonical JSONL plus Wikipedia and ASKfm adapters).
//! - [`classifier`]: sparse L2-regularized logistic regression.
//! - [`strategies`]: random, uncertainty and relevance-feedback batch selection.
//! - [`cost`]: recall targets, phase-two penalty and total cost.
//! - [`workflow`]: a single seeded TAR run over one topic.
//! - [`experiment`]: replicated plans, CSV tables and summary statistics.
//! - [`synthetic`]: generator for labeled test corpora.

pub mod classifier;
pub mod corpus;
pub mod cost;
pub mod error;
pub mod experiment;
pub mod seed;
pub mod strategies;
pub mod synthetic;
pub mod workflow;

pub use error::{Error, Result};

/// Identifier of a document within a dataset.
pub type DocId = u64;
