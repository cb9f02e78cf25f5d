//! Group-specific decision thresholds.
//!
//! Demographic-parity calibration sorts each group's scores in descending
//! order, takes `k = round(target * n_g)` and places the threshold halfway
//! between the k-th and (k+1)-th score. The decision rule is `score > tau`,
//! so with distinct scores exactly `k` calibration rows of the group are
//! positive.
//!
//! Thresholds live on the scale of the scores they were calibrated on.
//! Probabilities are the documented scale; the pipeline may calibrate on
//! log-odds instead, where saturated probabilities remain distinct.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::GroupCode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Per-group positive rates match a common target.
    DemographicParity,
    /// Per-group true-positive rates match a common target.
    EqualOpportunity,
    /// One threshold for every group.
    Fixed,
}

impl ThresholdMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdMode::DemographicParity => "dp",
            ThresholdMode::EqualOpportunity => "eo",
            ThresholdMode::Fixed => "fixed",
        }
    }
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dp" | "demographic_parity" => Ok(ThresholdMode::DemographicParity),
            "eo" | "equal_opportunity" => Ok(ThresholdMode::EqualOpportunity),
            "fixed" => Ok(ThresholdMode::Fixed),
            other => Err(Error::Config(format!(
                "unknown threshold mode {other:?} (expected dp, eo or fixed)"
            ))),
        }
    }
}

/// The scale scores and thresholds are expressed on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreScale {
    /// Positive-class probability in `[0, 1]`.
    #[default]
    Probability,
    /// `ln P(1|x) - ln P(0|x)`, any real.
    LogOdds,
}

impl ScoreScale {
    /// Threshold equivalent to probability 0.5.
    pub fn neutral(self) -> f64 {
        match self {
            ScoreScale::Probability => 0.5,
            ScoreScale::LogOdds => 0.0,
        }
    }

    /// Threshold that admits every score, and the one that admits none.
    fn bounds(self) -> (f64, f64) {
        match self {
            ScoreScale::Probability => (0.0, 1.0),
            ScoreScale::LogOdds => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn check(self, scores: &[f64]) -> Result<()> {
        let bad = match self {
            ScoreScale::Probability => scores.iter().position(|s| !(0.0..=1.0).contains(s)),
            ScoreScale::LogOdds => scores.iter().position(|s| s.is_nan()),
        };
        match bad {
            Some(i) => Err(Error::InvalidInput(format!(
                "score {i} = {} is not a valid {self:?} score",
                scores[i]
            ))),
            None => Ok(()),
        }
    }
}

/// Per-group thresholds; groups without an entry use `default_threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPolicy {
    pub mode: ThresholdMode,
    pub scale: ScoreScale,
    /// Rate the thresholds were calibrated to; `None` for fixed policies.
    pub target_rate: Option<f64>,
    pub default_threshold: f64,
    pub thresholds: BTreeMap<GroupCode, f64>,
}

#[derive(Serialize, Deserialize)]
struct PolicyRecord {
    mode: ThresholdMode,
    scale: ScoreScale,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_rate: Option<f64>,
    default_threshold: f64,
    thresholds: BTreeMap<String, f64>,
}

impl ThresholdPolicy {
    /// The same threshold for every group.
    pub fn fixed(tau: f64, scale: ScoreScale) -> Self {
        Self {
            mode: ThresholdMode::Fixed,
            scale,
            target_rate: None,
            default_threshold: tau,
            thresholds: BTreeMap::new(),
        }
    }

    pub fn threshold_for(&self, g: GroupCode) -> f64 {
        self.thresholds
            .get(&g)
            .copied()
            .unwrap_or(self.default_threshold)
    }

    pub fn decide(&self, score: f64, g: GroupCode) -> u8 {
        u8::from(score > self.threshold_for(g))
    }

    /// Plain-text (TOML) record of mode, scale, target rate and the
    /// group-to-threshold pairs.
    pub fn to_text(&self) -> String {
        let record = PolicyRecord {
            mode: self.mode,
            scale: self.scale,
            target_rate: self.target_rate,
            default_threshold: self.default_threshold,
            thresholds: self
                .thresholds
                .iter()
                .map(|(g, t)| (g.0.to_string(), *t))
                .collect(),
        };
        toml::to_string(&record).expect("policy record serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let record: PolicyRecord =
            toml::from_str(text).map_err(|e| Error::Format(format!("threshold policy: {e}")))?;
        let thresholds = record
            .thresholds
            .into_iter()
            .map(|(k, t)| {
                k.parse::<u16>()
                    .map(|c| (GroupCode(c), t))
                    .map_err(|_| Error::Format(format!("threshold policy: bad group code {k:?}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            mode: record.mode,
            scale: record.scale,
            target_rate: record.target_rate,
            default_threshold: record.default_threshold,
            thresholds,
        })
    }
}

fn check_rate(name: &str, rate: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{name} {rate} is outside [0, 1]"
        )))
    }
}

fn check_lengths(scores: usize, other: usize, what: &str) -> Result<()> {
    if scores != other {
        return Err(Error::LengthMismatch(format!(
            "{scores} scores, {other} {what}"
        )));
    }
    Ok(())
}

/// Threshold giving `round(rate * n)` positives among `scores` under the
/// `score > tau` rule when scores are distinct.
fn quantile_threshold(mut scores: Vec<f64>, rate: f64, scale: ScoreScale) -> f64 {
    let n = scores.len();
    let k = (rate * n as f64).round() as usize;
    let (bottom, top) = scale.bounds();
    if k == 0 {
        return top;
    }
    if k >= n {
        return bottom;
    }
    scores.sort_by(|a, b| b.total_cmp(a));
    scores[k - 1] / 2.0 + scores[k] / 2.0
}

fn group_scores<'a>(
    scores: &'a [f64],
    groups: &'a [GroupCode],
    keep: impl Fn(usize) -> bool + 'a,
) -> BTreeMap<GroupCode, Vec<f64>> {
    let mut by_group: BTreeMap<GroupCode, Vec<f64>> = BTreeMap::new();
    for (i, (&s, &g)) in scores.iter().zip(groups).enumerate() {
        if keep(i) {
            by_group.entry(g).or_default().push(s);
        }
    }
    by_group
}

/// Demographic-parity thresholds on positive-class probabilities.
pub fn calibrate_thresholds(
    scores: &[f64],
    groups: &[GroupCode],
    target_rate: f64,
) -> Result<ThresholdPolicy> {
    calibrate_parity(scores, groups, target_rate, ScoreScale::Probability)
}

/// Demographic-parity thresholds on any score scale.
pub fn calibrate_parity(
    scores: &[f64],
    groups: &[GroupCode],
    target_rate: f64,
    scale: ScoreScale,
) -> Result<ThresholdPolicy> {
    check_lengths(scores.len(), groups.len(), "group codes")?;
    check_rate("target rate", target_rate)?;
    scale.check(scores)?;
    if scores.is_empty() {
        return Err(Error::InvalidInput("no calibration scores".into()));
    }
    let thresholds = group_scores(scores, groups, |_| true)
        .into_iter()
        .map(|(g, s)| (g, quantile_threshold(s, target_rate, scale)))
        .collect();
    Ok(ThresholdPolicy {
        mode: ThresholdMode::DemographicParity,
        scale,
        target_rate: Some(target_rate),
        default_threshold: scale.neutral(),
        thresholds,
    })
}

/// Equal-opportunity thresholds: the rate-matching quantile is taken over
/// each group's positive-labelled rows, so each group's calibration TPR
/// matches `target_tpr`.
pub fn calibrate_opportunity(
    scores: &[f64],
    labels: &[u8],
    groups: &[GroupCode],
    target_tpr: f64,
    scale: ScoreScale,
) -> Result<ThresholdPolicy> {
    check_lengths(scores.len(), groups.len(), "group codes")?;
    check_lengths(scores.len(), labels.len(), "labels")?;
    check_rate("target TPR", target_tpr)?;
    scale.check(scores)?;
    let positives = group_scores(scores, groups, |i| labels[i] == 1);
    for g in group_scores(scores, groups, |_| true).keys() {
        if !positives.contains_key(g) {
            return Err(Error::InvalidInput(format!(
                "group {g} has no positive rows to calibrate a TPR on"
            )));
        }
    }
    let thresholds = positives
        .into_iter()
        .map(|(g, s)| (g, quantile_threshold(s, target_tpr, scale)))
        .collect();
    Ok(ThresholdPolicy {
        mode: ThresholdMode::EqualOpportunity,
        scale,
        target_rate: Some(target_tpr),
        default_threshold: scale.neutral(),
        thresholds,
    })
}

/// Fraction of scores `>= tau`.
pub fn overall_positive_rate(scores: &[f64], tau: f64) -> Result<f64> {
    ScoreScale::Probability.check(scores)?;
    Ok(rate_at_or_above(scores, tau))
}

fn rate_at_or_above(scores: &[f64], tau: f64) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    scores.iter().filter(|&&s| s >= tau).count() as f64 / scores.len() as f64
}

pub fn apply_policy(p: &ThresholdPolicy, scores: &[f64], groups: &[GroupCode]) -> Result<Vec<u8>> {
    check_lengths(scores.len(), groups.len(), "group codes")?;
    Ok(scores
        .iter()
        .zip(groups)
        .map(|(&s, &g)| p.decide(s, g))
        .collect())
}

/// Where the calibration target comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRate {
    /// The uncalibrated model's own rate at the neutral threshold (positive
    /// rate for DP, TPR for EO) on the calibration rows.
    #[default]
    Model,
    Fixed(f64),
}

/// A calibration criterion plus its target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    pub mode: ThresholdMode,
    pub target: TargetRate,
}

impl CalibrationSpec {
    pub fn demographic_parity() -> Self {
        Self {
            mode: ThresholdMode::DemographicParity,
            target: TargetRate::Model,
        }
    }

    /// Calibrates on labelled scores. `Fixed` mode returns one threshold:
    /// the neutral one, or a fixed target read as a probability and mapped
    /// onto `scale`.
    pub fn calibrate(
        &self,
        scores: &[f64],
        labels: &[u8],
        groups: &[GroupCode],
        scale: ScoreScale,
    ) -> Result<ThresholdPolicy> {
        check_lengths(scores.len(), labels.len(), "labels")?;
        let neutral = scale.neutral();
        match self.mode {
            ThresholdMode::DemographicParity => {
                let target = match self.target {
                    TargetRate::Model => rate_at_or_above(scores, neutral),
                    TargetRate::Fixed(r) => r,
                };
                calibrate_parity(scores, groups, target, scale)
            }
            ThresholdMode::EqualOpportunity => {
                let target = match self.target {
                    TargetRate::Model => {
                        let pos: Vec<f64> = scores
                            .iter()
                            .zip(labels)
                            .filter(|(_, &y)| y == 1)
                            .map(|(&s, _)| s)
                            .collect();
                        rate_at_or_above(&pos, neutral)
                    }
                    TargetRate::Fixed(r) => r,
                };
                calibrate_opportunity(scores, labels, groups, target, scale)
            }
            ThresholdMode::Fixed => {
                let tau = match self.target {
                    TargetRate::Model => neutral,
                    TargetRate::Fixed(t) => {
                        check_rate("fixed threshold", t)?;
                        match scale {
                            ScoreScale::Probability => t,
                            ScoreScale::LogOdds => t.ln() - (1.0 - t).ln(),
                        }
                    }
                };
                Ok(ThresholdPolicy::fixed(tau, scale))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: GroupCode = GroupCode(0);
    const B: GroupCode = GroupCode(1);

    #[test]
    fn midpoint_threshold() {
        let p = calibrate_thresholds(&[0.9, 0.1, 0.6, 0.4], &[A; 4], 0.5).unwrap();
        assert_eq!(p.threshold_for(A), 0.5);
        assert_eq!(
            apply_policy(&p, &[0.9, 0.1, 0.6, 0.4], &[A; 4]).unwrap(),
            vec![1, 0, 1, 0]
        );
    }

    #[test]
    fn edge_targets() {
        let s = [0.2, 0.7, 1.0, 0.0];
        let p = calibrate_thresholds(&s, &[A; 4], 0.0).unwrap();
        assert_eq!(p.threshold_for(A), 1.0);
        assert_eq!(apply_policy(&p, &s, &[A; 4]).unwrap(), vec![0; 4]);
        let p = calibrate_thresholds(&s, &[A; 4], 1.0).unwrap();
        assert_eq!(p.threshold_for(A), 0.0);
        // score exactly 0 sits on the threshold
        assert_eq!(apply_policy(&p, &s, &[A; 4]).unwrap(), vec![1, 1, 1, 0]);
    }

    #[test]
    fn invalid_inputs() {
        assert!(calibrate_thresholds(&[0.5], &[A], 1.5).is_err());
        assert!(calibrate_thresholds(&[0.5], &[A], -0.1).is_err());
        assert!(calibrate_thresholds(&[1.5], &[A], 0.5).is_err());
        assert!(calibrate_thresholds(&[], &[], 0.5).is_err());
        assert!(calibrate_thresholds(&[0.5], &[A, B], 0.5).is_err());
    }

    #[test]
    fn positive_rate_is_inclusive() {
        let r = overall_positive_rate(&[0.2, 0.6, 0.8], 0.5).unwrap();
        assert!((r - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(overall_positive_rate(&[0.2, 0.6, 0.8], 0.0).unwrap(), 1.0);
        assert_eq!(overall_positive_rate(&[0.5], 0.5).unwrap(), 1.0);
    }

    #[test]
    fn unmapped_group_uses_default() {
        let p = calibrate_thresholds(&[0.1, 0.9], &[A, A], 0.5).unwrap();
        assert_eq!(p.default_threshold, 0.5);
        assert_eq!(apply_policy(&p, &[0.7, 0.4], &[B, B]).unwrap(), vec![1, 0]);
    }

    #[test]
    fn groups_are_calibrated_separately() {
        let scores = [0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9];
        let groups = [A, A, A, A, B, B, B, B];
        let p = calibrate_thresholds(&scores, &groups, 0.25).unwrap();
        let y = apply_policy(&p, &scores, &groups).unwrap();
        assert_eq!(y, vec![0, 0, 0, 1, 0, 0, 0, 1]);
    }

    #[test]
    fn log_odds_edges_are_infinite() {
        let p = calibrate_parity(&[-3.0, 40.0], &[A, A], 0.0, ScoreScale::LogOdds).unwrap();
        assert_eq!(p.threshold_for(A), f64::INFINITY);
        let p = calibrate_parity(&[-3.0, 40.0], &[A, A], 1.0, ScoreScale::LogOdds).unwrap();
        assert_eq!(p.threshold_for(A), f64::NEG_INFINITY);
        assert_eq!(p.default_threshold, 0.0);
    }

    #[test]
    fn opportunity_matches_tpr() {
        let scores = [0.9, 0.8, 0.3, 0.2, 0.7, 0.6, 0.5, 0.1];
        let labels = [1, 1, 0, 1, 1, 1, 0, 0];
        let groups = [A, A, A, A, B, B, B, B];
        let p =
            calibrate_opportunity(&scores, &labels, &groups, 0.5, ScoreScale::Probability).unwrap();
        // A positives {0.9, 0.8, 0.2} -> k = 2; B positives {0.7, 0.6} -> k = 1
        assert!((p.threshold_for(A) - 0.5).abs() < 1e-15);
        assert!((p.threshold_for(B) - 0.65).abs() < 1e-15);
        assert!(
            calibrate_opportunity(&[0.5, 0.4], &[1, 0], &[A, B], 0.5, ScoreScale::Probability)
                .is_err()
        );
    }

    #[test]
    fn model_target_preserves_total_positive_rate() {
        let scores = [0.9, 0.8, 0.7, 0.3, 0.6, 0.2, 0.1, 0.05];
        let groups = [A, A, A, A, B, B, B, B];
        let spec = CalibrationSpec::demographic_parity();
        let p = spec
            .calibrate(&scores, &[0; 8], &groups, ScoreScale::Probability)
            .unwrap();
        assert_eq!(p.target_rate, Some(0.5));
        let y = apply_policy(&p, &scores, &groups).unwrap();
        assert_eq!(y.iter().filter(|&&v| v == 1).count(), 4);
    }

    #[test]
    fn fixed_target_is_a_probability() {
        let spec = CalibrationSpec {
            mode: ThresholdMode::Fixed,
            target: TargetRate::Fixed(0.5),
        };
        let p = spec
            .calibrate(&[0.3], &[0], &[A], ScoreScale::LogOdds)
            .unwrap();
        assert_eq!(p.default_threshold, 0.0);
        assert!(p.thresholds.is_empty());
        let spec = CalibrationSpec {
            mode: ThresholdMode::Fixed,
            target: TargetRate::Fixed(0.7),
        };
        let p = spec
            .calibrate(&[0.3], &[0], &[A], ScoreScale::Probability)
            .unwrap();
        assert_eq!(p.default_threshold, 0.7);
    }

    #[test]
    fn text_round_trip() {
        let p = calibrate_parity(
            &[-1.0, 2.0, 5.0, 0.5],
            &[A, A, B, B],
            0.5,
            ScoreScale::LogOdds,
        )
        .unwrap();
        let text = p.to_text();
        assert!(text.contains("demographic_parity"));
        assert_eq!(ThresholdPolicy::from_text(&text).unwrap(), p);
        let edge = calibrate_parity(&[1.0], &[A], 0.0, ScoreScale::LogOdds).unwrap();
        assert_eq!(ThresholdPolicy::from_text(&edge.to_text()).unwrap(), edge);
        assert!(ThresholdPolicy::from_text("mode = 3").is_err());
    }
}
