//! Fairness-aware Gaussian Naive Bayes.
//!
//! The crate is organised along the pipeline a run goes through:
//!
//! * [`dataset`] loads delimited files into group-annotated [`Dataset`]s and
//!   performs stratified splits over the joint (label, group) strata.
//! * [`preprocess`] fits min-max scaling, imputation and one-hot encoding on
//!   training rows, and provides SMOTE + edited-nearest-neighbour resampling.
//! * [`naive_bayes`] is the Gaussian Naive Bayes core.
//! * [`blended`] combines a pooled model with per-group models through a
//!   blending coefficient and selects that coefficient by cross-validation.
//! * [`threshold`] calibrates per-group decision thresholds from score
//!   quantiles.
//! * [`metrics`] computes classification and group-fairness metrics
//!   (SPD, DI, EOD, EMOD, bias index, fairness score).
//! * [`experiment`] wires everything into reproducible experiment runs and
//!   report files.

pub mod blended;
pub mod dataset;
mod error;
pub mod experiment;
mod matrix;
pub mod metrics;
pub mod naive_bayes;
pub mod preprocess;
pub mod threshold;

pub use blended::{AlphaSelection, BlendConfig, BlendedModel, PriorsMode};
pub use dataset::{Dataset, DatasetSchema, GroupCode, GroupTable};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use metrics::FairnessReport;
pub use naive_bayes::GaussianNb;
pub use preprocess::PreprocessPlan;
pub use threshold::ThresholdPolicy;
