//! Classification and group-fairness metrics.
//!
//! Group-fairness metrics compare an unprivileged group against a privileged
//! one; differences are always `unprivileged - privileged` and the disparate
//! impact ratio is `unprivileged / privileged`. Rates with a zero denominator
//! are `None` rather than zero, and `None` propagates into the bias index and
//! fairness score.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dataset::{GroupCode, GroupTable};
use crate::error::{Error, Result};

/// 2x2 confusion counts, class 1 positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    fn add(&mut self, truth: u8, pred: u8) {
        match (truth, pred) {
            (1, 1) => self.tp += 1,
            (0, 1) => self.fp += 1,
            (0, 0) => self.tn += 1,
            _ => self.fn_ += 1,
        }
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn check_binary(name: &str, v: &[u8]) -> Result<()> {
    match v.iter().position(|&x| x > 1) {
        Some(i) => Err(Error::InvalidInput(format!(
            "{name}[{i}] = {} is not a binary label",
            v[i]
        ))),
        None => Ok(()),
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<Confusion> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(format!(
            "{} true labels, {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    check_binary("y_true", y_true)?;
    check_binary("y_pred", y_pred)?;
    let mut c = Confusion::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        c.add(t, p);
    }
    Ok(c)
}

/// Rates of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub support: usize,
    pub actual_positives: usize,
    pub actual_negatives: usize,
    pub predicted_positives: usize,
    pub confusion: Confusion,
    /// P(y_hat = 1 | S = g)
    pub selection_rate: f64,
    /// TP / (TP + FN); `None` without actual positives
    pub tpr: Option<f64>,
    /// FP / (FP + TN); `None` without actual negatives
    pub fpr: Option<f64>,
}

impl GroupStats {
    fn from_confusion(c: Confusion) -> Self {
        let support = c.total();
        Self {
            support,
            actual_positives: c.tp + c.fn_,
            actual_negatives: c.fp + c.tn,
            predicted_positives: c.tp + c.fp,
            confusion: c,
            selection_rate: (c.tp + c.fp) as f64 / support as f64,
            tpr: ratio(c.tp, c.tp + c.fn_),
            fpr: ratio(c.fp, c.fp + c.tn),
        }
    }
}

/// Which code plays which role in the group comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRoles {
    pub privileged: GroupCode,
    pub unprivileged: GroupCode,
}

impl GroupRoles {
    pub fn from_table(table: &GroupTable) -> Self {
        Self {
            privileged: table.privileged(),
            unprivileged: table.unprivileged(),
        }
    }

    pub fn swapped(self) -> Self {
        Self {
            privileged: self.unprivileged,
            unprivileged: self.privileged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub per_group: BTreeMap<GroupCode, GroupStats>,
    pub roles: GroupRoles,
}

impl GroupRates {
    pub fn privileged(&self) -> &GroupStats {
        &self.per_group[&self.roles.privileged]
    }

    pub fn unprivileged(&self) -> &GroupStats {
        &self.per_group[&self.roles.unprivileged]
    }

    pub fn with_roles(&self, roles: GroupRoles) -> Self {
        Self {
            per_group: self.per_group.clone(),
            roles,
        }
    }
}

pub fn group_rates(
    y_true: &[u8],
    y_pred: &[u8],
    groups: &[GroupCode],
    roles: GroupRoles,
) -> Result<GroupRates> {
    if groups.len() != y_true.len() {
        return Err(Error::LengthMismatch(format!(
            "{} labels, {} group codes",
            y_true.len(),
            groups.len()
        )));
    }
    confusion(y_true, y_pred)?;
    let mut per: BTreeMap<GroupCode, Confusion> = BTreeMap::new();
    for ((&t, &p), &g) in y_true.iter().zip(y_pred).zip(groups) {
        per.entry(g).or_default().add(t, p);
    }
    for (role, code) in [
        ("privileged", roles.privileged),
        ("unprivileged", roles.unprivileged),
    ] {
        if !per.contains_key(&code) {
            return Err(Error::MissingGroup {
                role,
                name: code.to_string(),
            });
        }
    }
    Ok(GroupRates {
        per_group: per
            .into_iter()
            .map(|(g, c)| (g, GroupStats::from_confusion(c)))
            .collect(),
        roles,
    })
}

/// Unprivileged over privileged selection rate; `None` when the privileged
/// group has no positive predictions.
pub fn disparate_impact(r: &GroupRates) -> Option<f64> {
    let den = r.privileged().selection_rate;
    (den > 0.0).then(|| r.unprivileged().selection_rate / den)
}

pub fn statistical_parity_difference(r: &GroupRates) -> f64 {
    r.unprivileged().selection_rate - r.privileged().selection_rate
}

pub fn equal_opportunity_difference(r: &GroupRates) -> Option<f64> {
    Some(r.unprivileged().tpr? - r.privileged().tpr?)
}

pub fn equal_misopportunity_difference(r: &GroupRates) -> Option<f64> {
    Some(r.unprivileged().fpr? - r.privileged().fpr?)
}

/// How the deviations from the ideal values are aggregated into the bias
/// index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasAggregation {
    /// Mean absolute deviation.
    #[default]
    MeanAbsolute,
    /// Root mean squared deviation.
    RootMeanSquare,
}

/// Ideal values of (SPD, DI, EOD, EMOD).
pub const IDEAL: [f64; 4] = [0.0, 1.0, 0.0, 0.0];

/// Bias index: mean absolute deviation of (SPD, DI, EOD, EMOD) from
/// (0, 1, 0, 0).
pub fn bias_index(spd: f64, di: f64, eod: f64, emod: f64) -> f64 {
    bias_index_with(BiasAggregation::MeanAbsolute, spd, di, eod, emod)
}

pub fn bias_index_with(agg: BiasAggregation, spd: f64, di: f64, eod: f64, emod: f64) -> f64 {
    let observed = [spd, di, eod, emod];
    let dev = observed.iter().zip(IDEAL).map(|(m, ideal)| m - ideal);
    match agg {
        BiasAggregation::MeanAbsolute => dev.map(f64::abs).sum::<f64>() / 4.0,
        BiasAggregation::RootMeanSquare => (dev.map(|d| d * d).sum::<f64>() / 4.0).sqrt(),
    }
}

pub fn fairness_score(bi: f64) -> f64 {
    1.0 - bi
}

/// Precision, recall and F1 of one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    /// Index 0 is the negative class, index 1 the positive class.
    pub classes: [ClassMetrics; 2],
    pub accuracy: Option<f64>,
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub macro_f1: Option<f64>,
    pub confusion: Confusion,
}

fn class_metrics(tp: usize, fp: usize, fn_: usize) -> ClassMetrics {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support: tp + fn_,
    }
}

fn mean2(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(0.5 * (a? + b?))
}

pub fn classification_report(y_true: &[u8], y_pred: &[u8]) -> Result<ClassificationReport> {
    let c = confusion(y_true, y_pred)?;
    let negative = class_metrics(c.tn, c.fn_, c.fp);
    let positive = class_metrics(c.tp, c.fp, c.fn_);
    Ok(ClassificationReport {
        classes: [negative, positive],
        accuracy: ratio(c.tp + c.tn, c.total()),
        macro_precision: mean2(negative.precision, positive.precision),
        macro_recall: mean2(negative.recall, positive.recall),
        macro_f1: mean2(negative.f1, positive.f1),
        confusion: c,
    })
}

/// Classification metrics plus group-fairness metrics of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub classification: ClassificationReport,
    pub spd: f64,
    pub di: Option<f64>,
    pub eod: Option<f64>,
    pub emod: Option<f64>,
    pub bias_index: Option<f64>,
    pub fairness_score: Option<f64>,
    pub aggregation: BiasAggregation,
    pub group_rates: GroupRates,
    pub privileged_name: String,
    pub unprivileged_name: String,
}

impl FairnessReport {
    pub fn evaluate(
        y_true: &[u8],
        y_pred: &[u8],
        groups: &[GroupCode],
        table: &GroupTable,
        aggregation: BiasAggregation,
    ) -> Result<Self> {
        let roles = GroupRoles::from_table(table);
        let rates = group_rates(y_true, y_pred, groups, roles)?;
        let classification = classification_report(y_true, y_pred)?;
        let spd = statistical_parity_difference(&rates);
        let di = disparate_impact(&rates);
        let eod = equal_opportunity_difference(&rates);
        let emod = equal_misopportunity_difference(&rates);
        let bias_index = match (di, eod, emod) {
            (Some(di), Some(eod), Some(emod)) => {
                Some(bias_index_with(aggregation, spd, di, eod, emod))
            }
            _ => None,
        };
        Ok(Self {
            classification,
            spd,
            di,
            eod,
            emod,
            bias_index,
            fairness_score: bias_index.map(fairness_score),
            aggregation,
            privileged_name: table.label(roles.privileged),
            unprivileged_name: table.label(roles.unprivileged),
            group_rates: rates,
        })
    }

    pub fn accuracy(&self) -> f64 {
        self.classification.accuracy.unwrap_or(f64::NAN)
    }

    /// Flat key/value record; undefined values are `null`.
    pub fn flat_record(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let num = |v: Option<f64>| v.map_or(Value::Null, Value::from);
        let c = &self.classification;
        m.insert("accuracy".into(), num(c.accuracy));
        for (i, class) in c.classes.iter().enumerate() {
            m.insert(format!("precision_{i}"), num(class.precision));
            m.insert(format!("recall_{i}"), num(class.recall));
            m.insert(format!("f1_{i}"), num(class.f1));
            m.insert(format!("support_{i}"), Value::from(class.support));
        }
        m.insert("macro_precision".into(), num(c.macro_precision));
        m.insert("macro_recall".into(), num(c.macro_recall));
        m.insert("macro_f1".into(), num(c.macro_f1));
        m.insert("tp".into(), Value::from(c.confusion.tp));
        m.insert("fp".into(), Value::from(c.confusion.fp));
        m.insert("tn".into(), Value::from(c.confusion.tn));
        m.insert("fn".into(), Value::from(c.confusion.fn_));
        m.insert("spd".into(), Value::from(self.spd));
        m.insert("di".into(), num(self.di));
        m.insert("eod".into(), num(self.eod));
        m.insert("emod".into(), num(self.emod));
        m.insert("bias_index".into(), num(self.bias_index));
        m.insert("fairness_score".into(), num(self.fairness_score));
        m.insert(
            "bias_aggregation".into(),
            serde_json::to_value(self.aggregation).expect("enum serializes"),
        );
        m.insert(
            "privileged".into(),
            Value::from(self.privileged_name.clone()),
        );
        m.insert(
            "unprivileged".into(),
            Value::from(self.unprivileged_name.clone()),
        );
        for (role, stats) in [
            ("privileged", self.group_rates.privileged()),
            ("unprivileged", self.group_rates.unprivileged()),
        ] {
            m.insert(format!("{role}.support"), Value::from(stats.support));
            m.insert(
                format!("{role}.selection_rate"),
                Value::from(stats.selection_rate),
            );
            m.insert(format!("{role}.tpr"), num(stats.tpr));
            m.insert(format!("{role}.fpr"), num(stats.fpr));
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: GroupCode = GroupCode(0);
    const U: GroupCode = GroupCode(1);

    fn roles() -> GroupRoles {
        GroupRoles {
            privileged: P,
            unprivileged: U,
        }
    }

    #[test]
    fn confusion_counts() {
        let c = confusion(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!(
            c,
            Confusion {
                tp: 1,
                fp: 1,
                tn: 1,
                fn_: 1
            }
        );
        let c = confusion(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        assert!(confusion(&[1], &[1, 0]).is_err());
        assert!(confusion(&[2], &[1]).is_err());
    }

    #[test]
    fn tpr_from_counts() {
        // group U: TP = 3, FN = 1
        let y_true = [1, 1, 1, 1, 0, 1, 0];
        let y_pred = [1, 1, 1, 0, 0, 1, 1];
        let groups = [U, U, U, U, U, P, P];
        let r = group_rates(&y_true, &y_pred, &groups, roles()).unwrap();
        assert_eq!(r.unprivileged().tpr, Some(0.75));
        assert_eq!(r.unprivileged().fpr, Some(0.0));
        assert_eq!(r.privileged().fpr, Some(1.0));
    }

    #[test]
    fn all_negative_group_has_undefined_tpr() {
        let r = group_rates(&[0, 0, 1, 0], &[1, 0, 1, 0], &[U, U, P, P], roles()).unwrap();
        assert_eq!(r.unprivileged().tpr, None);
        assert_eq!(r.unprivileged().fpr, Some(0.5));
        assert_eq!(equal_opportunity_difference(&r), None);
    }

    #[test]
    fn missing_group_is_an_error() {
        assert!(matches!(
            group_rates(&[0, 1], &[0, 1], &[P, P], roles()),
            Err(Error::MissingGroup {
                role: "unprivileged",
                ..
            })
        ));
    }

    #[test]
    fn identical_groups_have_identical_rates() {
        let r = group_rates(&[1, 0, 1, 0], &[1, 0, 1, 0], &[P, P, U, U], roles()).unwrap();
        assert_eq!(
            r.privileged().selection_rate,
            r.unprivileged().selection_rate
        );
        assert_eq!(r.privileged().tpr, r.unprivileged().tpr);
        assert_eq!(r.privileged().fpr, r.unprivileged().fpr);
    }

    fn rates_with(sel_priv: (usize, usize), sel_unpriv: (usize, usize)) -> GroupRates {
        // (predicted positives, support) per group, all truths positive
        let mut y_true = Vec::new();
        let mut y_pred = Vec::new();
        let mut groups = Vec::new();
        for (g, (pos, n)) in [(P, sel_priv), (U, sel_unpriv)] {
            for i in 0..n {
                y_true.push(1);
                y_pred.push(u8::from(i < pos));
                groups.push(g);
            }
        }
        group_rates(&y_true, &y_pred, &groups, roles()).unwrap()
    }

    #[test]
    fn disparate_impact_ratio() {
        assert_eq!(disparate_impact(&rates_with((2, 10), (2, 10))), Some(1.0));
        assert_eq!(disparate_impact(&rates_with((6, 10), (3, 10))), Some(0.5));
        assert_eq!(disparate_impact(&rates_with((0, 10), (3, 10))), None);
    }

    #[test]
    fn statistical_parity_is_unprivileged_minus_privileged() {
        assert_eq!(
            statistical_parity_difference(&rates_with((3, 10), (3, 10))),
            0.0
        );
        let spd = statistical_parity_difference(&rates_with((3, 10), (5, 10)));
        assert!((spd - 0.2).abs() < 1e-15);
    }

    #[test]
    fn opportunity_differences() {
        // TPR_u = 0.75, TPR_p = 0.5
        let r = group_rates(
            &[1, 1, 1, 1, 1, 1, 0, 0],
            &[1, 1, 1, 0, 1, 0, 0, 0],
            &[U, U, U, U, P, P, P, U],
            roles(),
        )
        .unwrap();
        assert_eq!(equal_opportunity_difference(&r), Some(0.25));
        // FPR_u = 0.2, FPR_p = 0.1
        let mut y_true = vec![0u8; 20];
        let mut y_pred = vec![0u8; 20];
        let mut groups = vec![P; 10];
        groups.extend([U; 10]);
        y_pred[0] = 1;
        y_pred[10] = 1;
        y_pred[11] = 1;
        y_true.extend([1, 1]);
        y_pred.extend([1, 1]);
        groups.extend([P, U]);
        let r = group_rates(&y_true, &y_pred, &groups, roles()).unwrap();
        let emod = equal_misopportunity_difference(&r).unwrap();
        assert!((emod - 0.1).abs() < 1e-15);
    }

    #[test]
    fn bias_index_reproduces_reference_rows() {
        let bi = bias_index(0.37, 2.0027, 0.2159, -0.187);
        assert!((bi - 0.4439).abs() < 5e-5, "{bi}");
        assert!((fairness_score(bi) - 0.5560).abs() < 5e-4);
        let bi = bias_index(0.0, 1.0, -0.217, -0.148);
        assert!((bi - 0.09125).abs() < 1e-15);
        assert_eq!(bias_index(0.0, 1.0, 0.0, 0.0), 0.0);
        assert_eq!(fairness_score(0.0), 1.0);
    }

    #[test]
    fn rms_variant() {
        let bi = bias_index_with(BiasAggregation::RootMeanSquare, 0.2, 1.0, 0.0, 0.0);
        assert!((bi - 0.1).abs() < 1e-15);
    }

    #[test]
    fn classification_report_counts() {
        let r = classification_report(&[1, 0, 1, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!(r.accuracy, Some(1.0));
        for c in r.classes {
            assert_eq!(
                (c.precision, c.recall, c.f1),
                (Some(1.0), Some(1.0), Some(1.0))
            );
        }
        // class 1: TP = 1, FP = 1, FN = 1
        let r = classification_report(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap();
        let pos = r.classes[1];
        assert_eq!(
            (pos.precision, pos.recall, pos.f1),
            (Some(0.5), Some(0.5), Some(0.5))
        );
        let r = classification_report(&[0, 0], &[0, 0]).unwrap();
        assert_eq!(r.classes[1].precision, None);
        assert_eq!(r.classes[1].recall, None);
    }

    #[test]
    fn report_identity_and_flat_record() {
        let table = GroupTable::new("s", "m", "f");
        let rep = FairnessReport::evaluate(
            &[1, 0, 1, 0, 1, 1],
            &[1, 1, 0, 0, 1, 0],
            &[P, P, U, U, P, U],
            &table,
            BiasAggregation::MeanAbsolute,
        )
        .unwrap();
        assert_eq!(rep.fairness_score, rep.bias_index.map(|b| 1.0 - b));
        let flat = rep.flat_record();
        assert_eq!(flat["privileged"], "m");
        assert!(flat.contains_key("unprivileged.tpr"));
        assert!(flat.values().all(|v| !v.is_object() && !v.is_array()));
    }
}
