//! Gaussian Naive Bayes with variance smoothing and fixed class priors.
//!
//! Per class and feature the model stores the arithmetic mean and the
//! population variance plus a smoothing term `epsilon * max_j var_j`, where
//! `var_j` is the variance of feature `j` over all training rows (an absolute
//! `1e-12` when every feature is constant). Posteriors are computed in log
//! space and normalised with a max-subtracted exponentiation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_EPSILON: f64 = 1e-9;

const ABSOLUTE_VARIANCE_FLOOR: f64 = 1e-12;
const RECORD_FORMAT: &str = "fairbayes.gaussian_nb";
const RECORD_VERSION: u32 = 1;

/// Training options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnbParams {
    pub epsilon: f64,
    /// `[P(y=0), P(y=1)]`; empirical class frequencies when `None`.
    pub priors: Option<[f64; 2]>,
    /// Permit a fit where only one class is present.
    pub allow_single_class: bool,
}

impl Default for GnbParams {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            priors: None,
            allow_single_class: false,
        }
    }
}

/// A fitted binary Gaussian Naive Bayes model.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb {
    classes: Vec<u8>,
    priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
    epsilon: f64,
    var_smoothing: f64,
    class_counts: Vec<usize>,
    // log P(y) - 0.5 * sum_j ln(2 pi var_j), per class
    log_norm: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GnbRecord {
    format: String,
    version: u32,
    classes: Vec<u8>,
    priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
    epsilon: f64,
    var_smoothing: f64,
    class_counts: Vec<usize>,
}

impl GaussianNb {
    pub fn fit(x: &Matrix, y: &[u8], params: &GnbParams) -> Result<Self> {
        let n = x.nrows();
        let d = x.ncols();
        if y.len() != n {
            return Err(Error::LengthMismatch(format!(
                "{n} rows but {} labels",
                y.len()
            )));
        }
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput("empty training matrix".into()));
        }
        if !(params.epsilon > 0.0 && params.epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive, got {}",
                params.epsilon
            )));
        }
        if let Some(i) = x.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i % d));
        }
        if let Some(&bad) = y.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidInput(format!("label {bad} is not binary")));
        }

        let mut counts = [0usize; 2];
        for &label in y {
            counts[label as usize] += 1;
        }
        let classes: Vec<u8> = (0..2u8).filter(|&c| counts[c as usize] > 0).collect();
        if classes.len() < 2 && !params.allow_single_class {
            let absent = u8::from(counts[1] == 0);
            return Err(Error::EmptyClass(absent));
        }

        let priors = match params.priors {
            Some(p) if classes.len() == 2 => {
                if p.iter().any(|&v| !(v > 0.0 && v.is_finite()))
                    || (p[0] + p[1] - 1.0).abs() > 1e-9
                {
                    return Err(Error::InvalidInput(format!(
                        "priors {p:?} must be positive and sum to 1"
                    )));
                }
                p.to_vec()
            }
            _ if classes.len() == 1 => vec![1.0],
            _ => classes
                .iter()
                .map(|&c| counts[c as usize] as f64 / n as f64)
                .collect(),
        };

        let max_variance = (0..d)
            .map(|j| population_mean_var(x.column(j)).1)
            .fold(0.0, f64::max);
        let var_smoothing = if max_variance > 0.0 {
            params.epsilon * max_variance
        } else {
            ABSOLUTE_VARIANCE_FLOOR
        };

        let mut means = Vec::with_capacity(classes.len());
        let mut variances = Vec::with_capacity(classes.len());
        for &c in &classes {
            let rows: Vec<usize> = (0..n).filter(|&i| y[i] == c).collect();
            let mut mu = Vec::with_capacity(d);
            let mut var = Vec::with_capacity(d);
            for j in 0..d {
                let (m, v) = population_mean_var(rows.iter().map(|&i| x.get(i, j)));
                mu.push(m);
                var.push(v + var_smoothing);
            }
            means.push(mu);
            variances.push(var);
        }

        Ok(Self::assemble(
            classes,
            priors,
            means,
            variances,
            params.epsilon,
            var_smoothing,
            classes_counts(&counts),
        ))
    }

    fn assemble(
        classes: Vec<u8>,
        priors: Vec<f64>,
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
        epsilon: f64,
        var_smoothing: f64,
        class_counts: Vec<usize>,
    ) -> Self {
        let log_norm = priors
            .iter()
            .zip(&variances)
            .map(|(p, var)| {
                p.ln()
                    - 0.5
                        * var
                            .iter()
                            .map(|v| (2.0 * std::f64::consts::PI * v).ln())
                            .sum::<f64>()
            })
            .collect();
        Self {
            classes,
            priors,
            means,
            variances,
            epsilon,
            var_smoothing,
            class_counts,
            log_norm,
        }
    }

    pub fn classes(&self) -> &[u8] {
        &self.classes
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn variances(&self) -> &[Vec<f64>] {
        &self.variances
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The additive variance term, `epsilon * max feature variance`.
    pub fn var_smoothing(&self) -> f64 {
        self.var_smoothing
    }

    /// Training rows per entry of [`classes`](Self::classes).
    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn n_features(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn is_binary(&self) -> bool {
        self.classes == [0, 1]
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::LengthMismatch(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.n_features()
            )));
        }
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(j));
        }
        Ok(())
    }

    /// `log P(y) + sum_j log N(x_j; mean, var)` per class.
    pub fn joint_log_likelihood(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self
            .means
            .iter()
            .zip(&self.variances)
            .zip(&self.log_norm)
            .map(|((mu, var), norm)| {
                norm - 0.5
                    * x.iter()
                        .zip(mu)
                        .zip(var)
                        .map(|((xi, m), v)| (xi - m) * (xi - m) / v)
                        .sum::<f64>()
            })
            .collect())
    }

    /// Class posteriors in the order of [`classes`](Self::classes).
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let jll = self.joint_log_likelihood(x)?;
        let max = jll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = jll.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        Ok(exp.into_iter().map(|e| e / total).collect())
    }

    /// Normalised log posteriors, `jll - logsumexp(jll)`.
    pub fn predict_log_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let jll = self.joint_log_likelihood(x)?;
        let max = jll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + jll.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        Ok(jll.into_iter().map(|l| l - lse).collect())
    }

    /// Binary posteriors as `[P(y=0|x), P(y=1|x)]`.
    pub fn proba_pair(&self, x: &[f64]) -> Result<[f64; 2]> {
        let p = self.predict_proba(x)?;
        Ok(self.to_pair(&p, 0.0))
    }

    /// Binary log posteriors as `[ln P(y=0|x), ln P(y=1|x)]`.
    pub fn log_proba_pair(&self, x: &[f64]) -> Result<[f64; 2]> {
        let p = self.predict_log_proba(x)?;
        Ok(self.to_pair(&p, f64::NEG_INFINITY))
    }

    fn to_pair(&self, values: &[f64], absent: f64) -> [f64; 2] {
        let mut pair = [absent; 2];
        for (&c, &v) in self.classes.iter().zip(values) {
            pair[c as usize] = v;
        }
        pair
    }

    /// Predicted class: the argmax of the posterior, ties to the lower class.
    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        let p = self.proba_pair(x)?;
        Ok(u8::from(p[1] > p[0]))
    }

    /// Versioned JSON record with priors, means, variances, epsilon and
    /// class order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("model record serializes")
    }

    pub(crate) fn to_value(&self) -> serde_json::Value {
        let record = GnbRecord {
            format: RECORD_FORMAT.into(),
            version: RECORD_VERSION,
            classes: self.classes.clone(),
            priors: self.priors.clone(),
            means: self.means.clone(),
            variances: self.variances.clone(),
            epsilon: self.epsilon,
            var_smoothing: self.var_smoothing,
            class_counts: self.class_counts.clone(),
        };
        serde_json::to_value(record).expect("model record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text)?)
    }

    pub(crate) fn from_value(value: serde_json::Value) -> Result<Self> {
        let r: GnbRecord = serde_json::from_value(value)?;
        if r.format != RECORD_FORMAT || r.version != RECORD_VERSION {
            return Err(Error::Format(format!(
                "expected {RECORD_FORMAT} v{RECORD_VERSION}, found {} v{}",
                r.format, r.version
            )));
        }
        let k = r.classes.len();
        let d = r.means.first().map_or(0, Vec::len);
        let shapes_ok = k > 0
            && r.priors.len() == k
            && r.means.len() == k
            && r.variances.len() == k
            && r.class_counts.len() == k
            && r.means.iter().chain(&r.variances).all(|v| v.len() == d);
        if !shapes_ok {
            return Err(Error::Format("inconsistent array shapes".into()));
        }
        if r.variances.iter().flatten().any(|&v| !(v > 0.0)) {
            return Err(Error::Format("variances must be positive".into()));
        }
        Ok(Self::assemble(
            r.classes,
            r.priors,
            r.means,
            r.variances,
            r.epsilon,
            r.var_smoothing,
            r.class_counts,
        ))
    }
}

fn classes_counts(counts: &[usize; 2]) -> Vec<usize> {
    counts.iter().copied().filter(|&c| c > 0).collect()
}

fn population_mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (n, sum) = values
        .clone()
        .fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var)
}

/// Trains a model; see [`GaussianNb::fit`].
pub fn train_gnb(
    x: &Matrix,
    y: &[u8],
    epsilon: f64,
    priors: Option<[f64; 2]>,
) -> Result<GaussianNb> {
    GaussianNb::fit(
        x,
        y,
        &GnbParams {
            epsilon,
            priors,
            allow_single_class: false,
        },
    )
}
