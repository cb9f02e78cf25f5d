//! Experiment runs: data preparation shared by all variants, the variant
//! pipelines, alpha sweeps and ablations.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::blended::{select_alpha, AlphaSelection, BlendedModel, ComponentScores};
use crate::dataset::{load_dataset_file, stratified_split, Dataset, GroupCode};
use crate::error::Error;
use crate::matrix::Matrix;
use crate::metrics::FairnessReport;
use crate::preprocess::{fit_plan, smote_enn, PreprocessPlan};
use crate::threshold::ThresholdPolicy;

use super::config::{CalibrationSplit, ExperimentConfig, Variant};
use super::synthetic::Heterogeneous;

/// Pipeline stage an error occurred in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Load,
    Split,
    Preprocess,
    Resample,
    AlphaSelection,
    Train,
    Calibrate,
    Evaluate,
    Report,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Split => "split",
            Stage::Preprocess => "preprocess",
            Stage::Resample => "resample",
            Stage::AlphaSelection => "alpha-selection",
            Stage::Train => "train",
            Stage::Calibrate => "calibrate",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }

    /// Process exit code: 1 for configuration, 2 for data, 3 for pipeline
    /// errors.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 1,
            Stage::Load | Stage::Split => 2,
            _ => 3,
        }
    }
}

/// An error tagged with the stage it happened in.
#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage.as_str(), self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        self.stage.exit_code()
    }
}

pub type StageResult<T> = std::result::Result<T, StageError>;

pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> StageResult<T>;
}

impl<T> AtStage<T> for crate::error::Result<T> {
    fn at(self, stage: Stage) -> StageResult<T> {
        self.map_err(|source| StageError { stage, source })
    }
}

/// Split and preprocessed data shared by every variant of one config.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub plan: PreprocessPlan,
    /// Preprocessed training rows, before resampling.
    pub train: Dataset,
    /// Training rows the models are fitted on (resampled when enabled).
    pub fit: Dataset,
    pub test: Dataset,
    pub test_hash: String,
    pub train_hash: String,
}

impl Prepared {
    pub fn dataset_name(&self) -> &str {
        &self.config.dataset.name
    }
}

/// Load, split, preprocess and resample. Resampling touches only the
/// training side.
pub fn prepare(config: &ExperimentConfig) -> StageResult<Prepared> {
    config.validate().at(Stage::Config)?;
    let data = if config.dataset.is_synthetic() {
        Heterogeneous::default()
            .generate(config.seed)
            .at(Stage::Load)?
    } else {
        let schema = config.dataset.schema().at(Stage::Config)?;
        let path = config.dataset.resolved_path().at(Stage::Config)?;
        load_dataset_file(&path, &schema).at(Stage::Load)?
    };
    let (train_raw, test_raw) =
        stratified_split(&data, config.split.test_fraction, config.seed).at(Stage::Split)?;
    let pre = config.preprocess_config();
    let plan = fit_plan(&train_raw, &pre).at(Stage::Preprocess)?;
    let train = plan.apply(&train_raw).at(Stage::Preprocess)?;
    let test = plan.apply(&test_raw).at(Stage::Preprocess)?;
    let fit = match pre.resample {
        Some(p) => smote_enn(&train, p.k_smote, p.k_enn, p.seed).at(Stage::Resample)?,
        None => train.clone(),
    };
    Ok(Prepared {
        config: config.clone(),
        plan,
        train_hash: train_raw.row_set_hash(),
        test_hash: test_raw.row_set_hash(),
        train,
        fit,
        test,
    })
}

/// Positive rate of one group on the calibration rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCalibration {
    pub group: String,
    pub rows: usize,
    /// Rows whose calibration target applies (all rows for DP, positive
    /// rows for EO).
    pub reference_rows: usize,
    pub rate: f64,
}

/// How closely the calibrated policy meets its target on the calibration
/// rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCheck {
    pub split: CalibrationSplit,
    pub target_rate: f64,
    pub groups: Vec<GroupCalibration>,
}

impl CalibrationCheck {
    /// True when every group's rate is within `1 / n` of the target, `n`
    /// being the group's reference row count.
    pub fn within_quantization(&self) -> bool {
        self.groups
            .iter()
            .all(|g| (g.rate - self.target_rate).abs() <= 1.0 / g.reference_rows as f64 + 1e-12)
    }
}

/// Outcome of one variant run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub variant: Variant,
    pub alpha: f64,
    pub alpha_selection: Option<AlphaSelection>,
    pub policy: Option<ThresholdPolicy>,
    pub calibration: Option<CalibrationCheck>,
    pub report: FairnessReport,
    pub predictions: Vec<u8>,
    pub train_hash: String,
    pub test_hash: String,
    pub n_train: usize,
    pub n_fit: usize,
    pub n_test: usize,
    pub eligible_groups: Vec<String>,
    /// Wall-clock time of the variant pipeline; kept out of report files.
    pub duration: Duration,
}

/// A trained model and its test-row scores, reused across alphas.
pub struct Fitted {
    pub model: BlendedModel,
    test_x: Matrix,
    pub test_scores: ComponentScores,
    calibration_scores: Option<(ComponentScores, Vec<u8>)>,
}

pub fn fit_models(p: &Prepared) -> StageResult<Fitted> {
    let model = BlendedModel::train(&p.fit, &p.config.blend_config()).at(Stage::Train)?;
    let test_x = p.test.to_matrix().at(Stage::Train)?;
    let test_scores = model
        .component_scores(&test_x, p.test.groups())
        .at(Stage::Train)?;
    Ok(Fitted {
        model,
        test_x,
        test_scores,
        calibration_scores: None,
    })
}

impl Fitted {
    fn calibration_scores(&mut self, p: &Prepared) -> StageResult<&(ComponentScores, Vec<u8>)> {
        if self.calibration_scores.is_none() {
            let scores = match p.config.thresholding.calibration_split {
                CalibrationSplit::Train => {
                    let x = p.train.to_matrix().at(Stage::Calibrate)?;
                    let s = self
                        .model
                        .component_scores(&x, p.train.groups())
                        .at(Stage::Calibrate)?;
                    (s, p.train.labels().to_vec())
                }
                CalibrationSplit::Eval => (self.test_scores.clone(), p.test.labels().to_vec()),
            };
            self.calibration_scores = Some(scores);
        }
        Ok(self.calibration_scores.as_ref().expect("just filled"))
    }

    pub fn test_matrix(&self) -> &Matrix {
        &self.test_x
    }
}

fn calibration_check(
    p: &Prepared,
    policy: &ThresholdPolicy,
    scores: &ComponentScores,
    labels: &[u8],
    alpha: f64,
) -> StageResult<Option<CalibrationCheck>> {
    let Some(target) = policy.target_rate else {
        return Ok(None);
    };
    let pred = scores.predict(alpha, Some(policy)).at(Stage::Calibrate)?;
    let eo = policy.mode == crate::threshold::ThresholdMode::EqualOpportunity;
    let mut per: BTreeMap<GroupCode, (usize, usize, usize)> = BTreeMap::new();
    for ((&g, &y), &yhat) in scores.groups.iter().zip(labels).zip(&pred) {
        let e = per.entry(g).or_default();
        e.0 += 1;
        if !eo || y == 1 {
            e.1 += 1;
            e.2 += yhat as usize;
        }
    }
    let table = p.test.group_table();
    Ok(Some(CalibrationCheck {
        split: p.config.thresholding.calibration_split,
        target_rate: target,
        groups: per
            .into_iter()
            .map(|(g, (rows, reference_rows, positives))| GroupCalibration {
                group: table.label(g),
                rows,
                reference_rows,
                rate: positives as f64 / reference_rows as f64,
            })
            .collect(),
    }))
}

/// Runs `variant` at a given alpha on already-fitted models.
pub fn run_at_alpha(
    p: &Prepared,
    fitted: &mut Fitted,
    variant: Variant,
    alpha: f64,
) -> StageResult<RunResult> {
    let start = Instant::now();
    let (policy, calibration) = match p.config.calibration_for(variant) {
        Some(spec) => {
            let (scores, labels) = fitted.calibration_scores(p)?;
            let policy = scores
                .calibrate(alpha, &spec, labels)
                .at(Stage::Calibrate)?;
            let check = calibration_check(p, &policy, scores, labels, alpha)?;
            (Some(policy), check)
        }
        None => (None, None),
    };
    let predictions = fitted
        .test_scores
        .predict(alpha, policy.as_ref())
        .at(Stage::Evaluate)?;
    let report = FairnessReport::evaluate(
        p.test.labels(),
        &predictions,
        p.test.groups(),
        p.test.group_table(),
        p.config.bias_aggregation,
    )
    .at(Stage::Evaluate)?;
    let table = p.test.group_table();
    Ok(RunResult {
        config: p.config.clone(),
        variant,
        alpha,
        alpha_selection: None,
        policy,
        calibration,
        report,
        predictions,
        train_hash: p.train_hash.clone(),
        test_hash: p.test_hash.clone(),
        n_train: p.train.n_rows(),
        n_fit: p.fit.n_rows(),
        n_test: p.test.n_rows(),
        eligible_groups: fitted
            .model
            .eligible_groups()
            .into_iter()
            .map(|g| table.label(g))
            .collect(),
        duration: start.elapsed(),
    })
}

/// Cross-validated alpha for `variant`, on the fitting rows.
pub fn choose_alpha(p: &Prepared, variant: Variant) -> StageResult<AlphaSelection> {
    let m = &p.config.model;
    select_alpha(
        &p.fit,
        &m.alpha_grid,
        m.lambda,
        m.folds,
        p.config.seed,
        &p.config.pipeline_options(variant),
    )
    .at(Stage::AlphaSelection)
}

/// Alpha of `variant`: 0 without blending, the configured alpha if set,
/// otherwise cross-validated.
fn resolve_alpha(p: &Prepared, variant: Variant) -> StageResult<(f64, Option<AlphaSelection>)> {
    if !variant.uses_blending() {
        return Ok((0.0, None));
    }
    if let Some(a) = p.config.model.alpha {
        return Ok((a, None));
    }
    let sel = choose_alpha(p, variant)?;
    Ok((sel.chosen_alpha, Some(sel)))
}

pub fn run_variant(p: &Prepared, fitted: &mut Fitted, variant: Variant) -> StageResult<RunResult> {
    let start = Instant::now();
    let (alpha, selection) = resolve_alpha(p, variant)?;
    let mut r = run_at_alpha(p, fitted, variant, alpha)?;
    r.alpha_selection = selection;
    r.duration = start.elapsed();
    Ok(r)
}

/// Load, prepare and run the configured variant.
pub fn run_experiment(config: &ExperimentConfig) -> StageResult<RunResult> {
    let start = Instant::now();
    let p = prepare(config)?;
    let mut fitted = fit_models(&p)?;
    let mut r = run_variant(&p, &mut fitted, config.variant)?;
    r.duration = start.elapsed();
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub accuracy: f64,
    pub fairness_score: Option<f64>,
    pub bias_index: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub variant: Variant,
    pub points: Vec<SweepPoint>,
    pub runs: Vec<RunResult>,
}

/// One run per alpha, all on the same split, preprocessing and models.
pub fn alpha_sweep(p: &Prepared, variant: Variant, grid: &[f64]) -> StageResult<Sweep> {
    if !variant.uses_blending() {
        return Err(StageError {
            stage: Stage::Config,
            source: Error::Config(format!(
                "alpha sweeps need a blending variant, not {variant}"
            )),
        });
    }
    if grid.is_empty() {
        return Err(StageError {
            stage: Stage::Config,
            source: Error::Config("empty alpha grid".into()),
        });
    }
    let mut fitted = fit_models(p)?;
    let mut runs = Vec::with_capacity(grid.len());
    for &alpha in grid {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(StageError {
                stage: Stage::Config,
                source: Error::Config(format!("alpha {alpha} is outside [0, 1]")),
            });
        }
        runs.push(run_at_alpha(p, &mut fitted, variant, alpha)?);
    }
    let points = runs
        .iter()
        .map(|r| SweepPoint {
            alpha: r.alpha,
            accuracy: r.report.accuracy(),
            fairness_score: r.report.fairness_score,
            bias_index: r.report.bias_index,
        })
        .collect();
    Ok(Sweep {
        variant,
        points,
        runs,
    })
}

pub const ABLATION_VARIANTS: [Variant; 3] = [
    Variant::BlendedOnly,
    Variant::ThresholdOnly,
    Variant::FullBmnb,
];

/// The three ablation variants on one shared split and preprocessing.
pub fn ablation(p: &Prepared) -> StageResult<Vec<RunResult>> {
    let mut fitted = fit_models(p)?;
    ABLATION_VARIANTS
        .iter()
        .map(|&v| run_variant(p, &mut fitted, v))
        .collect()
}

/// The given variants on one shared split and preprocessing.
pub fn run_variants(p: &Prepared, variants: &[Variant]) -> StageResult<Vec<RunResult>> {
    let mut fitted = fit_models(p)?;
    variants
        .iter()
        .map(|&v| run_variant(p, &mut fitted, v))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub alpha: f64,
    /// Fairness score times accuracy; `None` when the fairness score is
    /// undefined.
    pub product: Option<f64>,
}

/// Dispersion of `F * A` over a sweep. Diagnostic only: nothing asserts the
/// product is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tradeoff {
    pub points: Vec<TradeoffPoint>,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// `max - min`
    pub spread: Option<f64>,
    /// Population standard deviation.
    pub std_dev: Option<f64>,
}

pub fn tradeoff_constant(sweep: &[SweepPoint]) -> Tradeoff {
    let points: Vec<TradeoffPoint> = sweep
        .iter()
        .map(|s| TradeoffPoint {
            alpha: s.alpha,
            product: s.fairness_score.map(|f| f * s.accuracy),
        })
        .collect();
    let defined: Vec<f64> = points.iter().filter_map(|p| p.product).collect();
    if defined.is_empty() {
        return Tradeoff {
            points,
            mean: None,
            min: None,
            max: None,
            spread: None,
            std_dev: None,
        };
    }
    let n = defined.len() as f64;
    let mean = defined.iter().sum::<f64>() / n;
    let min = defined.iter().copied().fold(f64::INFINITY, f64::min);
    let max = defined.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let var = defined.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Tradeoff {
        points,
        mean: Some(mean),
        min: Some(min),
        max: Some(max),
        spread: Some(max - min),
        std_dev: Some(var.sqrt()),
    }
}
