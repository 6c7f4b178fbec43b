//! Automatic subject indexing of short texts (titles) against a controlled
//! vocabulary, with document-level quality estimation.
//!
//! The pipeline assigns concepts with a binary-relevance logistic-regression
//! classifier, then estimates how complete each document's assignment is:
//! a label-calibration regressor predicts the expected number of concepts per
//! top category, and a recall regressor combines volume, content, calibration
//! and confidence features into an estimated document-level recall. Documents
//! can then be filtered by a recall threshold, trading collection coverage
//! against indexing quality.
//!
//! Modules follow the processing order:
//!
//! - [`corpus`] — documents, vocabularies, deterministic fold plans
//! - [`text`] — tokenization, term index, binary vectorization, OOV counts
//! - [`mlc`] — the multi-label classifier (SGD logistic regression)
//! - [`regress`] — regression learners (trees, boosting, extra-trees,
//!   AdaBoost.R2, least squares) used by calibration and recall estimation
//! - [`quality`] — reliability features, label calibration, recall
//!   estimation, precision scores and the quality gate
//! - [`eval`] — metrics, threshold sweeps, feature-group ablation and the
//!   nested cross-validation experiment protocol
//! - [`synth`] — synthetic corpora with controllable recall-loss mechanisms
//! - [`bundle`] — versioned model persistence
//! - [`config`] — run configuration shared by the CLI and the demo

pub mod bundle;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod mlc;
pub mod quality;
pub mod regress;
pub mod rng;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
