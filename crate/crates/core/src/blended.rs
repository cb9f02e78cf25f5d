//! Blended global/group-specific Gaussian Naive Bayes.
//!
//! A [`BlendedModel`] holds one model trained on all rows and one model per
//! sufficiently supported group. For a row of group `g` the output is the
//! convex combination `alpha * P_group + (1 - alpha) * P_global` of the two
//! posterior vectors. Groups without an eligible model use the global model
//! on both sides, so every group code resolves.
//!
//! [`select_alpha`] picks `alpha` from a grid by stratified cross-validation
//! of `J = lambda * accuracy + (1 - lambda) * fairness_score`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dataset::{complement, stratified_folds, Dataset, GroupCode};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{BiasAggregation, FairnessReport};
use crate::naive_bayes::{GaussianNb, GnbParams, DEFAULT_EPSILON};
use crate::threshold::{apply_policy, CalibrationSpec, ScoreScale, ThresholdPolicy};

pub const DEFAULT_MIN_SUPPORT: usize = 30;
pub const DEFAULT_ALPHA_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const DEFAULT_LAMBDA: f64 = 0.5;
pub const DEFAULT_FOLDS: usize = 5;

const RECORD_FORMAT: &str = "fairbayes.blended_nb";
const RECORD_VERSION: u32 = 1;

/// Class priors of the component models.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorsMode {
    /// Empirical priors of the whole training set, shared by every model.
    #[default]
    Fixed,
    /// Each model uses the class frequencies of its own rows.
    Empirical,
    /// The given `[P(y=0), P(y=1)]` for every model.
    Explicit([f64; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlendConfig {
    pub epsilon: f64,
    /// Minimum rows per class for a group model to be eligible.
    pub min_support: usize,
    pub priors: PriorsMode,
}

impl Default for BlendConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            min_support: DEFAULT_MIN_SUPPORT,
            priors: PriorsMode::Fixed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlendedModel {
    global: GaussianNb,
    // only eligible groups have an entry
    group_models: BTreeMap<GroupCode, GaussianNb>,
    demoted: BTreeMap<GroupCode, String>,
    alpha: Option<f64>,
    min_support: usize,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "alpha {alpha} is outside [0, 1]"
        )))
    }
}

/// `alpha * group + (1 - alpha) * global`, per class.
pub fn blend(group: [f64; 2], global: [f64; 2], alpha: f64) -> [f64; 2] {
    [
        alpha * group[0] + (1.0 - alpha) * global[0],
        alpha * group[1] + (1.0 - alpha) * global[1],
    ]
}

/// `ln(e^a + e^b)`. Exact when one term is `-inf`, which keeps the blended
/// log posteriors at `alpha` 0 and 1 equal to the component's.
fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln P1 - ln P0` of the blend, from component log posteriors.
pub fn blend_log_odds(group_log: [f64; 2], global_log: [f64; 2], alpha: f64) -> f64 {
    let (la, lb) = (alpha.ln(), (1.0 - alpha).ln());
    let log_p = |c: usize| log_add_exp(la + group_log[c], lb + global_log[c]);
    log_p(1) - log_p(0)
}

impl BlendedModel {
    /// Trains the global model on all rows and one model per group on that
    /// group's rows. A group is ineligible when a class has fewer than
    /// `min_support` rows in it; a group whose fit fails is demoted with the
    /// error recorded. Both fall back to the global model.
    pub fn train(train: &Dataset, config: &BlendConfig) -> Result<Self> {
        if train.n_rows() == 0 {
            return Err(Error::InvalidInput("empty training set".into()));
        }
        let x = train.to_matrix()?;
        let y = train.labels();
        let global_priors = match config.priors {
            PriorsMode::Explicit(p) => Some(p),
            PriorsMode::Fixed | PriorsMode::Empirical => None,
        };
        let global = GaussianNb::fit(
            &x,
            y,
            &GnbParams {
                epsilon: config.epsilon,
                priors: global_priors,
                allow_single_class: false,
            },
        )?;
        let group_priors = match config.priors {
            PriorsMode::Fixed => Some([global.priors()[0], global.priors()[1]]),
            PriorsMode::Explicit(p) => Some(p),
            PriorsMode::Empirical => None,
        };

        let mut by_group: BTreeMap<GroupCode, Vec<usize>> = BTreeMap::new();
        for (i, &g) in train.groups().iter().enumerate() {
            by_group.entry(g).or_default().push(i);
        }
        let mut group_models = BTreeMap::new();
        let mut demoted = BTreeMap::new();
        for (g, rows) in by_group {
            let mut counts = [0usize; 2];
            for &i in &rows {
                counts[y[i] as usize] += 1;
            }
            if let Some(c) = (0..2).find(|&c| counts[c] < config.min_support) {
                demoted.insert(
                    g,
                    format!(
                        "class {c} has {} rows, below min_support {}",
                        counts[c], config.min_support
                    ),
                );
                continue;
            }
            let gy: Vec<u8> = rows.iter().map(|&i| y[i]).collect();
            let params = GnbParams {
                epsilon: config.epsilon,
                priors: group_priors,
                allow_single_class: false,
            };
            match GaussianNb::fit(&x.select_rows(&rows), &gy, &params) {
                Ok(m) => {
                    group_models.insert(g, m);
                }
                Err(e) => {
                    demoted.insert(g, e.to_string());
                }
            }
        }
        Ok(Self {
            global,
            group_models,
            demoted,
            alpha: None,
            min_support: config.min_support,
        })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.set_alpha(alpha)?;
        Ok(self)
    }

    pub fn set_alpha(&mut self, alpha: f64) -> Result<()> {
        check_alpha(alpha)?;
        self.alpha = Some(alpha);
        Ok(())
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn min_support(&self) -> usize {
        self.min_support
    }

    pub fn global_model(&self) -> &GaussianNb {
        &self.global
    }

    pub fn group_models(&self) -> &BTreeMap<GroupCode, GaussianNb> {
        &self.group_models
    }

    pub fn eligible_groups(&self) -> BTreeSet<GroupCode> {
        self.group_models.keys().copied().collect()
    }

    /// Groups seen in training that fall back to the global model, with
    /// the reason.
    pub fn demoted_groups(&self) -> &BTreeMap<GroupCode, String> {
        &self.demoted
    }

    /// The group-side model for `g`: its own model when eligible, else the
    /// global model.
    pub fn resolve(&self, g: GroupCode) -> &GaussianNb {
        self.group_models.get(&g).unwrap_or(&self.global)
    }

    pub fn blend_proba(&self, x: &[f64], g: GroupCode) -> Result<[f64; 2]> {
        let alpha = self.alpha.ok_or(Error::AlphaUnset)?;
        let global = self.global.proba_pair(x)?;
        let group = self.resolve(g).proba_pair(x)?;
        Ok(blend(group, global, alpha))
    }

    pub fn blend_log_odds(&self, x: &[f64], g: GroupCode) -> Result<f64> {
        let alpha = self.alpha.ok_or(Error::AlphaUnset)?;
        let global = self.global.log_proba_pair(x)?;
        let group = self.resolve(g).log_proba_pair(x)?;
        Ok(blend_log_odds(group, global, alpha))
    }

    /// Argmax class of the blended posterior, ties to class 0.
    pub fn predict(&self, x: &[f64], g: GroupCode) -> Result<u8> {
        let p = self.blend_proba(x, g)?;
        Ok(u8::from(p[1] > p[0]))
    }

    /// Component posteriors of every row, for evaluating many alphas.
    pub fn component_scores(&self, x: &Matrix, groups: &[GroupCode]) -> Result<ComponentScores> {
        if x.nrows() != groups.len() {
            return Err(Error::LengthMismatch(format!(
                "{} rows, {} group codes",
                x.nrows(),
                groups.len()
            )));
        }
        let n = x.nrows();
        let mut s = ComponentScores {
            groups: groups.to_vec(),
            global: Vec::with_capacity(n),
            group: Vec::with_capacity(n),
            global_log: Vec::with_capacity(n),
            group_log: Vec::with_capacity(n),
        };
        for (row, &g) in x.rows().zip(groups) {
            let gm = self.resolve(g);
            s.global.push(self.global.proba_pair(row)?);
            s.global_log.push(self.global.log_proba_pair(row)?);
            s.group.push(gm.proba_pair(row)?);
            s.group_log.push(gm.log_proba_pair(row)?);
        }
        Ok(s)
    }

    /// Versioned JSON record: both component families, alpha, min_support
    /// and the demotion reasons.
    pub fn to_json(&self) -> String {
        let groups: Vec<Value> = self
            .group_models
            .iter()
            .map(|(g, m)| json!({ "code": g.0, "model": m.to_value() }))
            .collect();
        let demoted: Vec<Value> = self
            .demoted
            .iter()
            .map(|(g, why)| json!({ "code": g.0, "reason": why }))
            .collect();
        let record = json!({
            "format": RECORD_FORMAT,
            "version": RECORD_VERSION,
            "alpha": self.alpha,
            "min_support": self.min_support,
            "global": self.global.to_value(),
            "groups": groups,
            "demoted": demoted,
        });
        serde_json::to_string_pretty(&record).expect("model record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct GroupEntry {
            code: u16,
            model: Value,
        }
        #[derive(Deserialize)]
        struct DemotedEntry {
            code: u16,
            reason: String,
        }
        #[derive(Deserialize)]
        struct Record {
            format: String,
            version: u32,
            alpha: Option<f64>,
            min_support: usize,
            global: Value,
            groups: Vec<GroupEntry>,
            demoted: Vec<DemotedEntry>,
        }
        let r: Record = serde_json::from_str(text)?;
        if r.format != RECORD_FORMAT || r.version != RECORD_VERSION {
            return Err(Error::Format(format!(
                "expected {RECORD_FORMAT} v{RECORD_VERSION}, found {} v{}",
                r.format, r.version
            )));
        }
        if let Some(a) = r.alpha {
            check_alpha(a).map_err(|e| Error::Format(e.to_string()))?;
        }
        let global = GaussianNb::from_value(r.global)?;
        let mut group_models = BTreeMap::new();
        for e in r.groups {
            let m = GaussianNb::from_value(e.model)?;
            if m.n_features() != global.n_features() {
                return Err(Error::Format(format!(
                    "group {} model has {} features, global has {}",
                    e.code,
                    m.n_features(),
                    global.n_features()
                )));
            }
            group_models.insert(GroupCode(e.code), m);
        }
        Ok(Self {
            global,
            group_models,
            demoted: r
                .demoted
                .into_iter()
                .map(|e| (GroupCode(e.code), e.reason))
                .collect(),
            alpha: r.alpha,
            min_support: r.min_support,
        })
    }
}

/// Per-row posteriors of the global model and of the resolved group model,
/// in linear and log space, as `[class 0, class 1]` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentScores {
    pub groups: Vec<GroupCode>,
    pub global: Vec<[f64; 2]>,
    pub group: Vec<[f64; 2]>,
    pub global_log: Vec<[f64; 2]>,
    pub group_log: Vec<[f64; 2]>,
}

impl ComponentScores {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn proba(&self, alpha: f64) -> Vec<[f64; 2]> {
        self.group
            .iter()
            .zip(&self.global)
            .map(|(&g, &p)| blend(g, p, alpha))
            .collect()
    }

    pub fn log_odds(&self, alpha: f64) -> Vec<f64> {
        self.group_log
            .iter()
            .zip(&self.global_log)
            .map(|(&g, &p)| blend_log_odds(g, p, alpha))
            .collect()
    }

    /// Scores on `scale`: the blended positive-class probability or the
    /// blended log-odds.
    pub fn scores(&self, alpha: f64, scale: ScoreScale) -> Vec<f64> {
        match scale {
            ScoreScale::Probability => self.proba(alpha).iter().map(|p| p[1]).collect(),
            ScoreScale::LogOdds => self.log_odds(alpha),
        }
    }

    /// Argmax labels, ties to class 0.
    pub fn argmax(&self, alpha: f64) -> Vec<u8> {
        self.proba(alpha)
            .iter()
            .map(|p| u8::from(p[1] > p[0]))
            .collect()
    }

    /// Labels under `policy`, or argmax labels without one.
    pub fn predict(&self, alpha: f64, policy: Option<&ThresholdPolicy>) -> Result<Vec<u8>> {
        match policy {
            None => Ok(self.argmax(alpha)),
            Some(p) => apply_policy(p, &self.scores(alpha, p.scale), &self.groups),
        }
    }

    /// Calibrates a policy on these rows' blended log-odds.
    pub fn calibrate(
        &self,
        alpha: f64,
        spec: &CalibrationSpec,
        labels: &[u8],
    ) -> Result<ThresholdPolicy> {
        let scale = ScoreScale::LogOdds;
        spec.calibrate(&self.scores(alpha, scale), labels, &self.groups, scale)
    }
}

/// Everything downstream of preprocessing that a cross-validation fold
/// re-runs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub blend: BlendConfig,
    /// Threshold calibration on the fold-training rows; argmax when `None`.
    pub calibration: Option<CalibrationSpec>,
    pub aggregation: BiasAggregation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaScore {
    pub alpha: f64,
    pub cv_accuracy: f64,
    /// `None` when the fairness score is undefined on some fold.
    pub cv_fairness: Option<f64>,
    /// `None` when it depends on an undefined fairness score.
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSelection {
    pub grid: Vec<f64>,
    pub lambda: f64,
    pub folds: usize,
    pub seed: u64,
    pub scores: Vec<AlphaScore>,
    pub chosen_alpha: f64,
}

/// `lambda * accuracy + (1 - lambda) * fairness`. With `lambda == 1` the
/// fairness term is dropped entirely, so an undefined fairness score does
/// not matter; likewise accuracy with `lambda == 0`.
pub fn objective(lambda: f64, accuracy: f64, fairness: Option<f64>) -> Option<f64> {
    if lambda == 1.0 {
        return Some(accuracy);
    }
    let f = fairness?;
    if lambda == 0.0 {
        return Some(f);
    }
    Some(lambda * accuracy + (1.0 - lambda) * f)
}

/// Index of the maximal objective, ties to the smaller alpha.
fn argmax_objective(scores: &[AlphaScore]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        let Some(j) = s.objective else { continue };
        best = match best {
            Some(b) => {
                let (bj, ba) = (
                    scores[b].objective.expect("chosen rows are defined"),
                    scores[b].alpha,
                );
                if j > bj || (j == bj && s.alpha < ba) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
            None => Some(i),
        };
    }
    best
}

/// Per-fold (accuracy, fairness score) of every grid point.
fn cross_validate(
    train: &Dataset,
    grid: &[f64],
    folds: usize,
    seed: u64,
    options: &PipelineOptions,
) -> Result<Vec<Vec<(f64, Option<f64>)>>> {
    let fold_rows = stratified_folds(train, folds, seed)?;
    let x = train.to_matrix()?;
    let mut per_alpha = vec![Vec::with_capacity(folds); grid.len()];
    for held in &fold_rows {
        let fit_rows = complement(train.n_rows(), held);
        let fit = train.select_rows(&fit_rows);
        let eval = train.select_rows(held);
        let model = BlendedModel::train(&fit, &options.blend)?;
        let eval_scores = model.component_scores(&x.select_rows(held), eval.groups())?;
        let fit_scores = match options.calibration {
            Some(_) => Some(model.component_scores(&x.select_rows(&fit_rows), fit.groups())?),
            None => None,
        };
        for (a, &alpha) in grid.iter().enumerate() {
            let policy = match (&options.calibration, &fit_scores) {
                (Some(spec), Some(s)) => Some(s.calibrate(alpha, spec, fit.labels())?),
                _ => None,
            };
            let pred = eval_scores.predict(alpha, policy.as_ref())?;
            let report = FairnessReport::evaluate(
                eval.labels(),
                &pred,
                eval.groups(),
                eval.group_table(),
                options.aggregation,
            )?;
            per_alpha[a].push((report.accuracy(), report.fairness_score));
        }
    }
    Ok(per_alpha)
}

/// Stratified k-fold selection of alpha. Each fold trains the blended model
/// (and calibrates thresholds when enabled) on the remaining folds and
/// scores accuracy and fairness on the held-out fold; the fold means enter
/// the objective, and the largest objective wins with ties going to the
/// smaller alpha.
pub fn select_alpha(
    train: &Dataset,
    grid: &[f64],
    lambda: f64,
    folds: usize,
    seed: u64,
    options: &PipelineOptions,
) -> Result<AlphaSelection> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty alpha grid".into()));
    }
    for &a in grid {
        check_alpha(a)?;
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!(
            "lambda {lambda} is outside [0, 1]"
        )));
    }
    let per_alpha = cross_validate(train, grid, folds, seed, options)?;
    let scores: Vec<AlphaScore> = grid
        .iter()
        .zip(per_alpha)
        .map(|(&alpha, runs)| {
            let k = runs.len() as f64;
            let cv_accuracy = runs.iter().map(|r| r.0).sum::<f64>() / k;
            let cv_fairness = runs.iter().map(|r| r.1).sum::<Option<f64>>().map(|s| s / k);
            AlphaScore {
                alpha,
                cv_accuracy,
                cv_fairness,
                objective: objective(lambda, cv_accuracy, cv_fairness),
            }
        })
        .collect();
    let best = argmax_objective(&scores).ok_or_else(|| {
        Error::InvalidInput("no grid point has a defined objective (fairness undefined)".into())
    })?;
    Ok(AlphaSelection {
        grid: grid.to_vec(),
        lambda,
        folds,
        seed,
        chosen_alpha: scores[best].alpha,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::GroupTable;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const P: GroupCode = GroupCode(0);
    const U: GroupCode = GroupCode(1);

    /// Two features; in group 0 the label follows feature 0, in group 1 it
    /// follows the opposite direction. `pos_u` sets the positive count of
    /// group 1.
    fn opposed(n_per_group: usize, pos_u: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut groups = Vec::new();
        for (g, n_pos) in [(P, n_per_group / 2), (U, pos_u)] {
            for i in 0..n_per_group {
                let y = u8::from(i < n_pos);
                let sign = if (y == 1) == (g == P) { 1.0 } else { -1.0 };
                rows.push(vec![sign * 2.0 + rng.gen::<f64>() - 0.5, rng.gen::<f64>()]);
                labels.push(y);
                groups.push(g);
            }
        }
        Dataset::from_matrix(
            &Matrix::from_rows(&rows).unwrap(),
            vec!["a".into(), "b".into()],
            labels,
            groups,
            GroupTable::new("s", "p", "u"),
            "custom",
        )
        .unwrap()
    }

    #[test]
    fn supported_groups_are_eligible() {
        let m = BlendedModel::train(&opposed(100, 50, 1), &BlendConfig::default()).unwrap();
        assert_eq!(m.eligible_groups(), [P, U].into_iter().collect());
        assert!(m.demoted_groups().is_empty());
    }

    #[test]
    fn group_without_positives_falls_back() {
        let m = BlendedModel::train(&opposed(100, 0, 1), &BlendConfig::default()).unwrap();
        assert_eq!(m.eligible_groups(), [P].into_iter().collect());
        assert!(m.demoted_groups().contains_key(&U));
        assert_eq!(m.resolve(U), m.global_model());
    }

    #[test]
    fn support_floor_is_inclusive() {
        let config = BlendConfig::default();
        let below = BlendedModel::train(&opposed(100, config.min_support - 1, 2), &config).unwrap();
        assert!(!below.eligible_groups().contains(&U));
        let at = BlendedModel::train(&opposed(100, config.min_support, 2), &config).unwrap();
        assert!(at.eligible_groups().contains(&U));
    }

    #[test]
    fn unseen_group_resolves_to_global() {
        let m = BlendedModel::train(&opposed(60, 30, 3), &BlendConfig::default())
            .unwrap()
            .with_alpha(0.7)
            .unwrap();
        let x = [0.3, 0.4];
        assert_eq!(
            m.blend_proba(&x, GroupCode(9)).unwrap(),
            m.global_model().proba_pair(&x).unwrap()
        );
    }

    #[test]
    fn endpoints_match_components() {
        let m = BlendedModel::train(&opposed(80, 40, 4), &BlendConfig::default()).unwrap();
        let x = [1.1, -0.2];
        assert!(matches!(m.blend_proba(&x, U), Err(Error::AlphaUnset)));
        let m0 = m.clone().with_alpha(0.0).unwrap();
        let m1 = m.clone().with_alpha(1.0).unwrap();
        assert_eq!(
            m0.blend_proba(&x, U).unwrap(),
            m.global_model().proba_pair(&x).unwrap()
        );
        assert_eq!(
            m1.blend_proba(&x, U).unwrap(),
            m.resolve(U).proba_pair(&x).unwrap()
        );
        let gl = m.global_model().log_proba_pair(&x).unwrap();
        let ul = m.resolve(U).log_proba_pair(&x).unwrap();
        assert_eq!(m0.blend_log_odds(&x, U).unwrap(), gl[1] - gl[0]);
        assert_eq!(m1.blend_log_odds(&x, U).unwrap(), ul[1] - ul[0]);
        assert!(m.clone().with_alpha(1.5).is_err());
    }

    #[test]
    fn convex_midpoint() {
        let p = blend([0.8, 0.2], [0.4, 0.6], 0.5);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn log_odds_blend_agrees_with_probability_blend() {
        let (g, p) = ([0.8f64, 0.2], [0.4f64, 0.6]);
        for alpha in [0.1, 0.5, 0.9] {
            let b = blend(g, p, alpha);
            let lo = blend_log_odds([g[0].ln(), g[1].ln()], [p[0].ln(), p[1].ln()], alpha);
            assert!((lo - (b[1] / b[0]).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn component_scores_match_model() {
        let d = opposed(60, 30, 5);
        let m = BlendedModel::train(&d, &BlendConfig::default()).unwrap();
        let x = d.to_matrix().unwrap();
        let s = m.component_scores(&x, d.groups()).unwrap();
        let m = m.with_alpha(0.25).unwrap();
        for (i, row) in x.rows().enumerate() {
            assert_eq!(s.proba(0.25)[i], m.blend_proba(row, d.groups()[i]).unwrap());
            assert_eq!(s.argmax(0.25)[i], m.predict(row, d.groups()[i]).unwrap());
        }
    }

    #[test]
    fn json_round_trip() {
        let m = BlendedModel::train(&opposed(100, 10, 6), &BlendConfig::default())
            .unwrap()
            .with_alpha(0.5)
            .unwrap();
        let back = BlendedModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(BlendedModel::from_json("{}").is_err());
    }

    #[test]
    fn objective_collapses_at_extremes() {
        assert_eq!(objective(1.0, 0.8, None), Some(0.8));
        assert_eq!(objective(0.0, 0.8, Some(0.6)), Some(0.6));
        assert_eq!(objective(0.5, 0.8, None), None);
        assert!((objective(0.5, 0.8, Some(0.6)).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_smaller_alpha() {
        let row = |alpha, j| AlphaScore {
            alpha,
            cv_accuracy: j,
            cv_fairness: Some(j),
            objective: Some(j),
        };
        let scores = vec![row(0.75, 0.9), row(0.25, 0.9), row(0.5, 0.8)];
        assert_eq!(argmax_objective(&scores), Some(1));
    }

    #[test]
    fn singleton_grid() {
        let d = opposed(60, 30, 7);
        let sel = select_alpha(&d, &[0.5], 0.5, 3, 1, &PipelineOptions::default()).unwrap();
        assert_eq!(sel.chosen_alpha, 0.5);
        assert_eq!(sel.scores.len(), 1);
    }

    #[test]
    fn opposed_groups_prefer_group_models() {
        let d = crate::experiment::Heterogeneous::default()
            .generate(8)
            .unwrap();
        let sel = select_alpha(
            &d,
            &DEFAULT_ALPHA_GRID,
            1.0,
            5,
            42,
            &PipelineOptions::default(),
        )
        .unwrap();
        assert_eq!(sel.chosen_alpha, 1.0);
        let by_alpha = |a: f64| {
            sel.scores
                .iter()
                .find(|s| s.alpha == a)
                .unwrap()
                .cv_accuracy
        };
        assert!(by_alpha(1.0) > by_alpha(0.0));
    }

    #[test]
    fn selection_rejects_bad_arguments() {
        let d = opposed(60, 30, 9);
        let o = PipelineOptions::default();
        assert!(select_alpha(&d, &[], 0.5, 3, 0, &o).is_err());
        assert!(select_alpha(&d, &[1.2], 0.5, 3, 0, &o).is_err());
        assert!(select_alpha(&d, &[0.5], 1.5, 3, 0, &o).is_err());
        assert!(matches!(
            select_alpha(&opposed(60, 3, 9), &[0.5], 0.5, 5, 0, &o),
            Err(Error::StratumTooSmall { .. })
        ));
    }
}
