//! Constructed datasets with known group structure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, GroupCode, GroupTable};
use crate::error::Result;
use crate::matrix::Matrix;

/// Two groups whose feature-label relations point in opposite directions.
///
/// Feature `signal` is `+sep` for positives and `-sep` for negatives in the
/// privileged group, and reversed in the unprivileged group, plus noise.
/// Feature `nuisance` is uniform on `[0, 1)` and label-independent. Labels
/// alternate within each group, so both classes are balanced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Heterogeneous {
    pub n_privileged: usize,
    pub n_unprivileged: usize,
    pub privileged_separation: f64,
    pub unprivileged_separation: f64,
    pub privileged_noise: f64,
    pub unprivileged_noise: f64,
}

impl Default for Heterogeneous {
    /// A large, well-separated privileged group that dominates the pooled
    /// model, and a smaller unprivileged group with a weak reversed signal.
    fn default() -> Self {
        Self {
            n_privileged: 3000,
            n_unprivileged: 400,
            privileged_separation: 3.0,
            unprivileged_separation: 0.4,
            privileged_noise: 0.5,
            unprivileged_noise: 1.5,
        }
    }
}

pub const SYNTHETIC_NAME: &str = "synthetic";

impl Heterogeneous {
    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n_privileged + self.n_unprivileged;
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut groups = Vec::with_capacity(n);
        let spec = [
            (
                GroupCode::PRIVILEGED,
                self.n_privileged,
                self.privileged_separation,
                self.privileged_noise,
            ),
            (
                GroupCode::UNPRIVILEGED,
                self.n_unprivileged,
                -self.unprivileged_separation,
                self.unprivileged_noise,
            ),
        ];
        for (g, count, sep, noise) in spec {
            for i in 0..count {
                let y = (i % 2) as u8;
                let centre = if y == 1 { sep } else { -sep };
                // Irwin-Hall(4) centred: variance 1/3
                let e: f64 = (0..4).map(|_| rng.gen::<f64>() - 0.5).sum();
                rows.push([centre + noise * e, rng.gen::<f64>()]);
                labels.push(y);
                groups.push(g);
            }
        }
        Dataset::from_matrix(
            &Matrix::from_rows(&rows)?,
            vec!["signal".into(), "nuisance".into()],
            labels,
            groups,
            GroupTable::new("group", "a", "b"),
            SYNTHETIC_NAME,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_balance() {
        let p = Heterogeneous {
            n_privileged: 10,
            n_unprivileged: 6,
            ..Default::default()
        };
        let d = p.generate(1).unwrap();
        assert_eq!(d.n_rows(), 16);
        assert_eq!(d.class_counts(), [8, 8]);
        assert_eq!(d, p.generate(1).unwrap());
    }
}
