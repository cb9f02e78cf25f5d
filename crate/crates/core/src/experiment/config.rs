//! Experiment configuration.
//!
//! Every field has a default, so a config naming only a dataset is valid.
//! Files are TOML with the same section and key names as the structs below;
//! unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::blended::{
    BlendConfig, PipelineOptions, PriorsMode, DEFAULT_ALPHA_GRID, DEFAULT_FOLDS, DEFAULT_LAMBDA,
    DEFAULT_MIN_SUPPORT,
};
use crate::dataset::DatasetSchema;
use crate::error::{Error, Result};
use crate::metrics::BiasAggregation;
use crate::naive_bayes::DEFAULT_EPSILON;
use crate::preprocess::{PreprocessConfig, SmoteEnnParams};
use crate::threshold::{CalibrationSpec, TargetRate, ThresholdMode};

use super::synthetic::SYNTHETIC_NAME;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Global model, argmax decisions.
    Baseline,
    /// Blended model, argmax decisions.
    BlendedOnly,
    /// Global model, calibrated thresholds.
    ThresholdOnly,
    /// Blended model, calibrated thresholds.
    FullBmnb,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Baseline,
        Variant::BlendedOnly,
        Variant::ThresholdOnly,
        Variant::FullBmnb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::BlendedOnly => "blended_only",
            Variant::ThresholdOnly => "threshold_only",
            Variant::FullBmnb => "full_bmnb",
        }
    }

    pub fn uses_blending(self) -> bool {
        matches!(self, Variant::BlendedOnly | Variant::FullBmnb)
    }

    pub fn uses_thresholds(self) -> bool {
        matches!(self, Variant::ThresholdOnly | Variant::FullBmnb)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown variant {s:?} (expected baseline, blended_only, threshold_only or full_bmnb)"
                ))
            })
    }
}

/// Threshold calibration of the variants that calibrate; `none` switches it
/// off for every variant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdChoice {
    #[default]
    Dp,
    Eo,
    Fixed,
    None,
}

impl FromStr for ThresholdChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dp" => Ok(ThresholdChoice::Dp),
            "eo" => Ok(ThresholdChoice::Eo),
            "fixed" => Ok(ThresholdChoice::Fixed),
            "none" => Ok(ThresholdChoice::None),
            other => Err(Error::Config(format!(
                "unknown threshold mode {other:?} (expected dp, eo, fixed or none)"
            ))),
        }
    }
}

/// Which rows the thresholds are calibrated on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationSplit {
    /// Preprocessed training rows before resampling.
    #[default]
    Train,
    /// The evaluation rows themselves.
    Eval,
}

impl FromStr for CalibrationSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(CalibrationSplit::Train),
            "eval" => Ok(CalibrationSplit::Eval),
            other => Err(Error::Config(format!(
                "unknown calibration split {other:?} (expected train or eval)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// `adult`, `compas`, `framingham`, `synthetic`, or the name of a custom
    /// schema.
    pub name: String,
    /// Data file; defaults to the built-in file name under `data/`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// TOML schema file replacing the built-in schema.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            name: "adult".into(),
            path: None,
            schema: None,
        }
    }
}

impl DatasetConfig {
    pub fn is_synthetic(&self) -> bool {
        self.name == SYNTHETIC_NAME && self.schema.is_none()
    }

    pub fn schema(&self) -> Result<DatasetSchema> {
        match &self.schema {
            Some(p) => DatasetSchema::from_file(p),
            None => DatasetSchema::builtin(&self.name).ok_or_else(|| {
                Error::Config(format!(
                    "unknown dataset {:?}; built-ins are {:?} and {SYNTHETIC_NAME:?}, \
                     other datasets need a schema file",
                    self.name,
                    DatasetSchema::builtin_names()
                ))
            }),
        }
    }

    pub fn resolved_path(&self) -> Result<PathBuf> {
        if let Some(p) = &self.path {
            return Ok(p.clone());
        }
        let file = match self.name.as_str() {
            "adult" => "adult.csv",
            "compas" => "compas-scores-two-years.csv",
            "framingham" => "framingham.csv",
            other => {
                return Err(Error::Config(format!(
                    "dataset {other:?} needs an explicit path"
                )))
            }
        };
        Ok(Path::new("data").join(file))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { test_fraction: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessingConfig {
    pub scale_min: f64,
    pub scale_max: f64,
    /// SMOTE + ENN on the training rows.
    pub resample: bool,
    pub k_smote: usize,
    pub k_enn: usize,
}

impl Default for PreprocessingConfig {
    fn default() -> Self {
        let p = SmoteEnnParams::default();
        Self {
            scale_min: 0.0,
            scale_max: 1.0,
            resample: true,
            k_smote: p.k_smote,
            k_enn: p.k_enn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub epsilon: f64,
    pub min_support: usize,
    pub priors: PriorsMode,
    /// Fixed alpha; selected by cross-validation over `alpha_grid` when
    /// unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub alpha_grid: Vec<f64>,
    pub lambda: f64,
    pub folds: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            min_support: DEFAULT_MIN_SUPPORT,
            priors: PriorsMode::Fixed,
            alpha: None,
            alpha_grid: DEFAULT_ALPHA_GRID.to_vec(),
            lambda: DEFAULT_LAMBDA,
            folds: DEFAULT_FOLDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub mode: ThresholdChoice,
    pub target: TargetRate,
    pub calibration_split: CalibrationSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Text,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Report directory; nothing is written when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub formats: Vec<ReportFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            formats: vec![ReportFormat::Json, ReportFormat::Text, ReportFormat::Csv],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub variant: Variant,
    pub bias_aggregation: BiasAggregation,
    pub dataset: DatasetConfig,
    pub split: SplitConfig,
    pub preprocessing: PreprocessingConfig,
    pub model: ModelConfig,
    pub thresholding: ThresholdConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            variant: Variant::FullBmnb,
            bias_aggregation: BiasAggregation::MeanAbsolute,
            dataset: DatasetConfig::default(),
            split: SplitConfig::default(),
            preprocessing: PreprocessingConfig::default(),
            model: ModelConfig::default(),
            thresholding: ThresholdConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn for_dataset(name: &str) -> Self {
        Self {
            dataset: DatasetConfig {
                name: name.into(),
                ..Default::default()
            },
            ..Default::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let tf = self.split.test_fraction;
        if !(tf > 0.0 && tf < 1.0) {
            return bad(format!("split.test_fraction {tf} is outside (0, 1)"));
        }
        let p = &self.preprocessing;
        if !(p.scale_min < p.scale_max) || !p.scale_min.is_finite() || !p.scale_max.is_finite() {
            return bad(format!(
                "preprocessing scale range [{}, {}] is empty",
                p.scale_min, p.scale_max
            ));
        }
        if p.resample && (p.k_smote == 0 || p.k_enn == 0) {
            return bad("k_smote and k_enn must be at least 1".into());
        }
        let m = &self.model;
        if !(m.epsilon > 0.0 && m.epsilon.is_finite()) {
            return bad(format!("model.epsilon {} must be positive", m.epsilon));
        }
        if let Some(a) = m.alpha {
            if !(0.0..=1.0).contains(&a) {
                return bad(format!("model.alpha {a} is outside [0, 1]"));
            }
        }
        if m.alpha_grid.is_empty() {
            return bad("model.alpha_grid is empty".into());
        }
        if let Some(a) = m.alpha_grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return bad(format!("alpha grid value {a} is outside [0, 1]"));
        }
        if !(0.0..=1.0).contains(&m.lambda) {
            return bad(format!("model.lambda {} is outside [0, 1]", m.lambda));
        }
        if m.folds < 2 {
            return bad(format!("model.folds {} must be at least 2", m.folds));
        }
        if let PriorsMode::Explicit(pr) = m.priors {
            if pr.iter().any(|&v| !(v > 0.0)) || (pr[0] + pr[1] - 1.0).abs() > 1e-9 {
                return bad(format!(
                    "explicit priors {pr:?} must be positive and sum to 1"
                ));
            }
        }
        if let TargetRate::Fixed(t) = self.thresholding.target {
            if !(0.0..=1.0).contains(&t) {
                return bad(format!("thresholding target {t} is outside [0, 1]"));
            }
        }
        if self.output.formats.is_empty() {
            return bad("output.formats is empty".into());
        }
        Ok(())
    }

    pub fn preprocess_config(&self) -> PreprocessConfig {
        let p = &self.preprocessing;
        PreprocessConfig {
            scale_range: (p.scale_min, p.scale_max),
            resample: p.resample.then_some(SmoteEnnParams {
                k_smote: p.k_smote,
                k_enn: p.k_enn,
                seed: self.seed,
            }),
        }
    }

    pub fn blend_config(&self) -> BlendConfig {
        BlendConfig {
            epsilon: self.model.epsilon,
            min_support: self.model.min_support,
            priors: self.model.priors,
        }
    }

    /// Calibration applied by `variant`, if any.
    pub fn calibration_for(&self, variant: Variant) -> Option<CalibrationSpec> {
        if !variant.uses_thresholds() {
            return None;
        }
        let mode = match self.thresholding.mode {
            ThresholdChoice::Dp => ThresholdMode::DemographicParity,
            ThresholdChoice::Eo => ThresholdMode::EqualOpportunity,
            ThresholdChoice::Fixed => ThresholdMode::Fixed,
            ThresholdChoice::None => return None,
        };
        Some(CalibrationSpec {
            mode,
            target: self.thresholding.target,
        })
    }

    pub fn pipeline_options(&self, variant: Variant) -> PipelineOptions {
        PipelineOptions {
            blend: self.blend_config(),
            calibration: self.calibration_for(variant),
            aggregation: self.bias_aggregation,
        }
    }
}
