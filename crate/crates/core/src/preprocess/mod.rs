//! Imputation, min-max scaling, one-hot encoding and resampling.
//!
//! A [`PreprocessPlan`] is fitted on training rows only and then applied
//! unchanged to any dataset with the same columns. Numeric columns are imputed
//! with the training median and mapped affinely by the training min/max
//! (values outside the training range are not clipped). Categorical columns
//! are imputed with the training mode and expanded to one-hot indicators;
//! unseen categories encode as all zeros.

mod neighbors;
mod resample;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureColumn};
use crate::error::{Error, Result};

pub use resample::{edited_nearest_neighbours, smote, smote_enn};

/// SMOTE + ENN parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoteEnnParams {
    pub k_smote: usize,
    pub k_enn: usize,
    pub seed: u64,
}

impl Default for SmoteEnnParams {
    fn default() -> Self {
        Self {
            k_smote: 5,
            k_enn: 3,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub scale_range: (f64, f64),
    pub resample: Option<SmoteEnnParams>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            scale_range: (0.0, 1.0),
            resample: Some(SmoteEnnParams::default()),
        }
    }
}

/// Fitted statistics for one input column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnPlan {
    Numeric {
        name: String,
        min: f64,
        max: f64,
        median: f64,
    },
    Categorical {
        name: String,
        vocabulary: Vec<String>,
        mode: String,
    },
}

impl ColumnPlan {
    pub fn name(&self) -> &str {
        match self {
            ColumnPlan::Numeric { name, .. } | ColumnPlan::Categorical { name, .. } => name,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ColumnPlan::Numeric { .. } => "numeric",
            ColumnPlan::Categorical { .. } => "categorical",
        }
    }

    /// Constant training column: every value maps to the range midpoint.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, ColumnPlan::Numeric { min, max, .. } if min == max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessPlan {
    scale_range: (f64, f64),
    columns: Vec<ColumnPlan>,
    resample: Option<SmoteEnnParams>,
}

impl PreprocessPlan {
    pub fn scale_range(&self) -> (f64, f64) {
        self.scale_range
    }

    pub fn columns(&self) -> &[ColumnPlan] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&ColumnPlan> {
        self.columns.iter().find(|c| c.name() == name)
    }

    pub fn resample(&self) -> Option<SmoteEnnParams> {
        self.resample
    }

    /// Names of the encoded output features, `column=value` for indicators.
    pub fn output_feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for c in &self.columns {
            match c {
                ColumnPlan::Numeric { name, .. } => names.push(name.clone()),
                ColumnPlan::Categorical {
                    name, vocabulary, ..
                } => names.extend(vocabulary.iter().map(|v| format!("{name}={v}"))),
            }
        }
        names
    }

    /// Imputes, scales and encodes `d`. The result is fully numeric.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        self.check_columns(d)?;
        let (lo, hi) = self.scale_range;
        let mut out = Vec::new();
        for (plan, col) in self.columns.iter().zip(d.columns()) {
            match (plan, col) {
                (
                    ColumnPlan::Numeric {
                        min, max, median, ..
                    },
                    FeatureColumn::Numeric(values),
                ) => {
                    let (min, max, median) = (*min, *max, *median);
                    let scaled = values
                        .iter()
                        .map(|v| {
                            let v = v.unwrap_or(median);
                            Some(if max > min {
                                lo + (v - min) / (max - min) * (hi - lo)
                            } else {
                                0.5 * (lo + hi)
                            })
                        })
                        .collect();
                    out.push(FeatureColumn::Numeric(scaled));
                }
                (
                    ColumnPlan::Categorical {
                        vocabulary, mode, ..
                    },
                    FeatureColumn::Categorical(values),
                ) => {
                    for category in vocabulary {
                        let indicator = values
                            .iter()
                            .map(|v| {
                                let v = v.as_deref().unwrap_or(mode);
                                Some(if v == category { 1.0 } else { 0.0 })
                            })
                            .collect();
                        out.push(FeatureColumn::Numeric(indicator));
                    }
                }
                _ => unreachable!("column kinds checked above"),
            }
        }
        Dataset::with_origins(
            out,
            self.output_feature_names(),
            d.labels().to_vec(),
            d.groups().to_vec(),
            d.group_table().clone(),
            d.origins().to_vec(),
            d.schema_name(),
        )
    }

    fn check_columns(&self, d: &Dataset) -> Result<()> {
        let mut problems = Vec::new();
        let expected: BTreeMap<&str, &str> =
            self.columns.iter().map(|c| (c.name(), c.kind())).collect();
        let found: BTreeMap<&str, &str> = d
            .feature_names()
            .iter()
            .zip(d.columns())
            .map(|(n, c)| {
                (
                    n.as_str(),
                    if c.is_numeric() {
                        "numeric"
                    } else {
                        "categorical"
                    },
                )
            })
            .collect();
        for (name, kind) in &expected {
            match found.get(name) {
                None => problems.push(format!("missing `{name}`")),
                Some(k) if k != kind => {
                    problems.push(format!("`{name}` is {k}, plan expects {kind}"))
                }
                _ => {}
            }
        }
        for name in found.keys() {
            if !expected.contains_key(name) {
                problems.push(format!("unexpected `{name}`"));
            }
        }
        if problems.is_empty() {
            let order_matches = self
                .columns
                .iter()
                .map(ColumnPlan::name)
                .eq(d.feature_names().iter().map(String::as_str));
            if !order_matches {
                problems.push("columns are in a different order".into());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::ColumnMismatch(problems.join("; ")))
        }
    }
}

/// Learns per-column statistics from `train`.
pub fn fit_plan(train: &Dataset, config: &PreprocessConfig) -> Result<PreprocessPlan> {
    let (lo, hi) = config.scale_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidInput(format!(
            "scale range ({lo}, {hi}) must be finite with lo < hi"
        )));
    }
    if let Some(p) = config.resample {
        if p.k_smote == 0 || p.k_enn == 0 {
            return Err(Error::InvalidInput(
                "resampling k values must be >= 1".into(),
            ));
        }
    }
    if train.n_rows() == 0 {
        return Err(Error::InvalidInput(
            "cannot fit a plan on an empty dataset".into(),
        ));
    }
    let mut columns = Vec::with_capacity(train.n_features());
    for (name, col) in train.feature_names().iter().zip(train.columns()) {
        let plan = match col {
            FeatureColumn::Numeric(values) => {
                let mut observed: Vec<f64> = values.iter().flatten().copied().collect();
                if observed.is_empty() {
                    return Err(Error::EmptyColumn(name.clone()));
                }
                observed.sort_by(f64::total_cmp);
                let n = observed.len();
                let median = if n % 2 == 1 {
                    observed[n / 2]
                } else {
                    0.5 * (observed[n / 2 - 1] + observed[n / 2])
                };
                ColumnPlan::Numeric {
                    name: name.clone(),
                    min: observed[0],
                    max: observed[n - 1],
                    median,
                }
            }
            FeatureColumn::Categorical(values) => {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for v in values.iter().flatten() {
                    *counts.entry(v.as_str()).or_default() += 1;
                }
                if counts.is_empty() {
                    return Err(Error::EmptyColumn(name.clone()));
                }
                // BTreeMap iterates in sorted order, so `max_by_key` keeping the
                // last maximum would pick the largest name; reverse to prefer the
                // smallest on ties.
                let mode = counts
                    .iter()
                    .rev()
                    .max_by_key(|(_, &c)| c)
                    .map(|(v, _)| v.to_string())
                    .unwrap();
                ColumnPlan::Categorical {
                    name: name.clone(),
                    vocabulary: counts.keys().map(|v| v.to_string()).collect(),
                    mode,
                }
            }
        };
        columns.push(plan);
    }
    Ok(PreprocessPlan {
        scale_range: config.scale_range,
        columns,
        resample: config.resample,
    })
}

pub fn apply_plan(plan: &PreprocessPlan, d: &Dataset) -> Result<Dataset> {
    plan.apply(d)
}
