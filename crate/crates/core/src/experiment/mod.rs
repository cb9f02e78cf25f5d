//! End-to-end experiments.
//!
//! [`prepare`] loads, splits and preprocesses once; every variant, sweep
//! point and ablation row of a config then shares that partition. Reports
//! are emitted by the functions in [`report`].

pub mod config;
pub mod pipeline;
pub mod report;
pub mod synthetic;

pub use config::{
    CalibrationSplit, ExperimentConfig, ReportFormat, ThresholdChoice, Variant, DEFAULT_SEED,
};
pub use pipeline::{
    ablation, alpha_sweep, choose_alpha, fit_models, prepare, run_at_alpha, run_experiment,
    run_variant, run_variants, tradeoff_constant, CalibrationCheck, Prepared, RunResult, Stage,
    StageError, StageResult, Sweep, SweepPoint, Tradeoff,
};
pub use report::{compare_report, ComparisonTable, ReportFiles};
pub use synthetic::Heterogeneous;
