//! Report emission: flat JSON, aligned plain-text tables and CSV plot data.
//!
//! Every report carries the seed in its header. Report contents depend only
//! on the config and seed; wall-clock durations are never written.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::blended::AlphaSelection;
use crate::error::Result;
use crate::metrics::FairnessReport;
use crate::threshold::ThresholdPolicy;

use super::config::{ExperimentConfig, ReportFormat};
use super::pipeline::{RunResult, Sweep, Tradeoff};

/// Comparison column transcribed from reported results of an external
/// fairness-certification method; never recomputed.
pub const EXTERNAL_REFERENCE_LABEL: &str = "fairness_certification (transcribed)";
pub const EXTERNAL_REFERENCE: [(&str, f64); 6] = [
    ("SPD", -0.1945),
    ("DI", 0.3598),
    ("EOD", 0.1257),
    ("EMOD", 0.0958),
    ("BI", 0.2641),
    ("FS", 0.7360),
];

/// Metric rows of comparison and ablation tables, in display order.
pub const METRICS: [&str; 7] = ["Accuracy", "EOD", "EMOD", "SPD", "DI", "BI", "FS"];

fn metric_value(r: &FairnessReport, name: &str) -> Option<f64> {
    match name {
        "Accuracy" => r.classification.accuracy,
        "EOD" => r.eod,
        "EMOD" => r.emod,
        "SPD" => Some(r.spd),
        "DI" => r.di,
        "BI" => r.bias_index,
        "FS" => r.fairness_score,
        _ => None,
    }
}

/// JSON number, with non-finite values as strings (`"inf"`, `"-inf"`).
fn num(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else {
        Value::from(v.to_string())
    }
}

fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

fn cell(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "undefined".into(), |x| format!("{x:.decimals$}"))
}

fn csv_cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Column-aligned table; the first column is left-aligned, the rest right.
pub fn render_table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(String::len).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(headers);
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

/// Report files keyed by format, ready to be written.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportFiles {
    pub stem: String,
    pub json: String,
    pub text: String,
    pub csv: String,
}

impl ReportFiles {
    pub fn contents(&self, format: ReportFormat) -> (&'static str, &str) {
        match format {
            ReportFormat::Json => ("json", &self.json),
            ReportFormat::Text => ("txt", &self.text),
            ReportFormat::Csv => ("csv", &self.csv),
        }
    }

    /// Writes the selected formats into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for &f in formats {
            let (ext, body) = self.contents(f);
            let path = dir.join(format!("{}.{ext}", self.stem));
            std::fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn header_text(title: &str, config: &ExperimentConfig) -> String {
    format!(
        "# {title}\n# dataset: {}\n# seed: {}\n",
        config.dataset.name, config.seed
    )
}

fn header_csv(config: &ExperimentConfig) -> String {
    format!("# dataset={} seed={}\n", config.dataset.name, config.seed)
}

fn header_json(kind: &str, config: &ExperimentConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("report".into(), Value::from(kind));
    m.insert("seed".into(), Value::from(config.seed));
    m.insert("dataset".into(), Value::from(config.dataset.name.clone()));
    m
}

fn pretty(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
    s.push('\n');
    s
}

fn policy_json(p: &ThresholdPolicy, run: &RunResult) -> Value {
    let table = run.report.group_rates.roles;
    let names = [
        (table.privileged, run.report.privileged_name.clone()),
        (table.unprivileged, run.report.unprivileged_name.clone()),
    ];
    let thresholds: Map<String, Value> = p
        .thresholds
        .iter()
        .map(|(g, t)| {
            let name = names
                .iter()
                .find(|(c, _)| c == g)
                .map_or_else(|| g.to_string(), |(_, n)| n.clone());
            (name, num(*t))
        })
        .collect();
    json!({
        "mode": p.mode.as_str(),
        "scale": serde_json::to_value(p.scale).expect("enum serializes"),
        "target_rate": opt_num(p.target_rate),
        "default_threshold": num(p.default_threshold),
        "thresholds": thresholds,
    })
}

fn selection_json(s: &AlphaSelection) -> Value {
    json!({
        "grid": s.grid,
        "lambda": s.lambda,
        "folds": s.folds,
        "seed": s.seed,
        "chosen_alpha": s.chosen_alpha,
        "scores": s.scores.iter().map(|r| json!({
            "alpha": r.alpha,
            "cv_accuracy": r.cv_accuracy,
            "cv_fairness": opt_num(r.cv_fairness),
            "objective": opt_num(r.objective),
        })).collect::<Vec<_>>(),
    })
}

fn run_json(r: &RunResult) -> Value {
    json!({
        "variant": r.variant.as_str(),
        "alpha": r.alpha,
        "alpha_selection": r.alpha_selection.as_ref().map(selection_json),
        "policy": r.policy.as_ref().map(|p| policy_json(p, r)),
        "calibration": r.calibration.as_ref().map(|c| serde_json::to_value(c).expect("serializes")),
        "metrics": Value::Object(r.report.flat_record()),
        "eligible_groups": r.eligible_groups,
        "rows": { "train": r.n_train, "fit": r.n_fit, "test": r.n_test },
        "train_hash": r.train_hash,
        "test_hash": r.test_hash,
    })
}

fn config_json(c: &ExperimentConfig) -> Value {
    serde_json::to_value(c).expect("config serializes")
}

fn metrics_rows(r: &FairnessReport) -> Vec<Vec<String>> {
    METRICS
        .iter()
        .map(|m| vec![m.to_string(), cell(metric_value(r, m), 4)])
        .collect()
}

pub fn run_report(r: &RunResult) -> ReportFiles {
    let c = &r.config;
    let mut j = header_json("run", c);
    j.insert("config".into(), config_json(c));
    j.insert("result".into(), run_json(r));

    let mut text = header_text(&format!("run: {}", r.variant), c);
    text.push_str(&format!(
        "# alpha: {}\n# groups: privileged={} unprivileged={}\n\n",
        r.alpha, r.report.privileged_name, r.report.unprivileged_name
    ));
    text.push_str(&render_table(
        &["metric".into(), "value".into()],
        &metrics_rows(&r.report),
    ));

    let mut csv = header_csv(c);
    csv.push_str("metric,value\n");
    for m in METRICS {
        csv.push_str(&format!("{m},{}\n", csv_cell(metric_value(&r.report, m))));
    }
    ReportFiles {
        stem: format!("run_{}_{}", c.dataset.name, r.variant),
        json: pretty(Value::Object(j)),
        text,
        csv,
    }
}

/// Variants as rows, metrics as columns.
pub fn ablation_report(results: &[RunResult]) -> ReportFiles {
    let c = &results[0].config;
    let mut j = header_json("ablation", c);
    j.insert("config".into(), config_json(c));
    j.insert(
        "runs".into(),
        Value::Array(results.iter().map(run_json).collect()),
    );

    let mut headers = vec!["variant".to_string()];
    headers.extend(METRICS.iter().map(|m| m.to_string()));
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let mut row = vec![r.variant.to_string()];
            row.extend(METRICS.iter().map(|m| cell(metric_value(&r.report, m), 4)));
            row
        })
        .collect();
    let mut text = header_text("ablation", c);
    text.push('\n');
    text.push_str(&render_table(&headers, &rows));

    let mut csv = header_csv(c);
    csv.push_str(&headers.join(","));
    csv.push('\n');
    for r in results {
        let mut row = vec![r.variant.to_string()];
        row.extend(METRICS.iter().map(|m| csv_cell(metric_value(&r.report, m))));
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    ReportFiles {
        stem: format!("ablation_{}", c.dataset.name),
        json: pretty(Value::Object(j)),
        text,
        csv,
    }
}

/// One column of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonColumn {
    pub label: String,
    /// Values in [`METRICS`] order; `None` for undefined or unavailable.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub config: ExperimentConfig,
    pub columns: Vec<ComparisonColumn>,
}

/// Metric rows by result columns, optionally followed by the transcribed
/// external reference column.
pub fn compare_report(results: &[RunResult], with_reference: bool) -> ComparisonTable {
    let mut columns: Vec<ComparisonColumn> = results
        .iter()
        .map(|r| ComparisonColumn {
            label: r.variant.to_string(),
            values: METRICS.iter().map(|m| metric_value(&r.report, m)).collect(),
        })
        .collect();
    if with_reference {
        columns.push(reference_column());
    }
    ComparisonTable {
        config: results
            .first()
            .map_or_else(ExperimentConfig::default, |r| r.config.clone()),
        columns,
    }
}

pub fn reference_column() -> ComparisonColumn {
    ComparisonColumn {
        label: EXTERNAL_REFERENCE_LABEL.into(),
        values: METRICS
            .iter()
            .map(|m| {
                EXTERNAL_REFERENCE
                    .iter()
                    .find(|(k, _)| k == m)
                    .map(|&(_, v)| v)
            })
            .collect(),
    }
}

impl ComparisonTable {
    pub fn files(&self) -> ReportFiles {
        let c = &self.config;
        let mut j = header_json("comparison", c);
        j.insert("config".into(), config_json(c));
        let cols: Vec<Value> = self
            .columns
            .iter()
            .map(|col| {
                let mut m = Map::new();
                m.insert("label".into(), Value::from(col.label.clone()));
                for (name, v) in METRICS.iter().zip(&col.values) {
                    m.insert(name.to_string(), opt_num(*v));
                }
                Value::Object(m)
            })
            .collect();
        j.insert("columns".into(), Value::Array(cols));

        let mut headers = vec!["metric".to_string()];
        headers.extend(self.columns.iter().map(|c| c.label.clone()));
        let rows: Vec<Vec<String>> = METRICS
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let mut row = vec![m.to_string()];
                row.extend(self.columns.iter().map(|c| match c.values[i] {
                    Some(v) => format!("{v:.4}"),
                    None if c.label == EXTERNAL_REFERENCE_LABEL => "-".into(),
                    None => "undefined".into(),
                }));
                row
            })
            .collect();
        let mut text = header_text("comparison", c);
        text.push('\n');
        text.push_str(&render_table(&headers, &rows));

        let mut csv = header_csv(c);
        csv.push_str(&headers.join(","));
        csv.push('\n');
        for (i, m) in METRICS.iter().enumerate() {
            let mut row = vec![m.to_string()];
            row.extend(self.columns.iter().map(|c| csv_cell(c.values[i])));
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        ReportFiles {
            stem: format!("compare_{}", c.dataset.name),
            json: pretty(Value::Object(j)),
            text,
            csv,
        }
    }
}

/// Accuracy and fairness curves over alpha, plus the `F * A` diagnostic.
pub fn sweep_report(config: &ExperimentConfig, sweep: &Sweep, tradeoff: &Tradeoff) -> ReportFiles {
    let mut j = header_json("alpha_sweep", config);
    j.insert("config".into(), config_json(config));
    j.insert("variant".into(), Value::from(sweep.variant.as_str()));
    j.insert(
        "points".into(),
        Value::Array(
            sweep
                .points
                .iter()
                .zip(&tradeoff.points)
                .map(|(p, t)| {
                    json!({
                        "alpha": p.alpha,
                        "accuracy": p.accuracy,
                        "fairness_score": opt_num(p.fairness_score),
                        "bias_index": opt_num(p.bias_index),
                        "fairness_times_accuracy": opt_num(t.product),
                    })
                })
                .collect(),
        ),
    );
    j.insert(
        "tradeoff".into(),
        json!({
            "mean": opt_num(tradeoff.mean),
            "min": opt_num(tradeoff.min),
            "max": opt_num(tradeoff.max),
            "spread": opt_num(tradeoff.spread),
            "std_dev": opt_num(tradeoff.std_dev),
        }),
    );

    let headers: Vec<String> = ["alpha", "accuracy", "FS", "BI", "FS*Acc"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = sweep
        .points
        .iter()
        .zip(&tradeoff.points)
        .map(|(p, t)| {
            vec![
                format!("{:.2}", p.alpha),
                format!("{:.4}", p.accuracy),
                cell(p.fairness_score, 4),
                cell(p.bias_index, 4),
                cell(t.product, 4),
            ]
        })
        .collect();
    let mut text = header_text(&format!("alpha sweep: {}", sweep.variant), config);
    text.push('\n');
    text.push_str(&render_table(&headers, &rows));
    text.push_str(&format!(
        "\nFS*Acc mean {}  spread {}  std {} (diagnostic, not asserted constant)\n",
        cell(tradeoff.mean, 4),
        cell(tradeoff.spread, 4),
        cell(tradeoff.std_dev, 4)
    ));

    let mut csv = header_csv(config);
    csv.push_str("alpha,accuracy,fairness_score,bias_index,fairness_times_accuracy\n");
    for (p, t) in sweep.points.iter().zip(&tradeoff.points) {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            p.alpha,
            p.accuracy,
            csv_cell(p.fairness_score),
            csv_cell(p.bias_index),
            csv_cell(t.product)
        ));
    }
    ReportFiles {
        stem: format!("sweep_{}_{}", config.dataset.name, sweep.variant),
        json: pretty(Value::Object(j)),
        text,
        csv,
    }
}

pub fn alpha_selection_report(config: &ExperimentConfig, s: &AlphaSelection) -> ReportFiles {
    let mut j = header_json("alpha_selection", config);
    j.insert("config".into(), config_json(config));
    j.insert("selection".into(), selection_json(s));

    let headers: Vec<String> = ["alpha", "cv_accuracy", "cv_FS", "J"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = s
        .scores
        .iter()
        .map(|r| {
            let mark = if r.alpha == s.chosen_alpha { " *" } else { "" };
            vec![
                format!("{:.2}{mark}", r.alpha),
                format!("{:.4}", r.cv_accuracy),
                cell(r.cv_fairness, 4),
                cell(r.objective, 4),
            ]
        })
        .collect();
    let mut text = header_text("alpha selection", config);
    text.push_str(&format!("# lambda: {}  folds: {}\n\n", s.lambda, s.folds));
    text.push_str(&render_table(&headers, &rows));
    text.push_str(&format!("\nchosen alpha: {}\n", s.chosen_alpha));

    let mut csv = header_csv(config);
    csv.push_str("alpha,cv_accuracy,cv_fairness,objective\n");
    for r in &s.scores {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.alpha,
            r.cv_accuracy,
            csv_cell(r.cv_fairness),
            csv_cell(r.objective)
        ));
    }
    ReportFiles {
        stem: format!("alpha_selection_{}", config.dataset.name),
        json: pretty(Value::Object(j)),
        text,
        csv,
    }
}
