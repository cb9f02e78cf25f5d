//! SMOTE oversampling followed by edited-nearest-neighbour cleaning.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::neighbors::nearest_within;
use crate::dataset::{Dataset, FeatureColumn, RowOrigin};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Oversamples the minority class until both classes have the same count.
///
/// The `needed = majority - minority` synthetic rows are spread over the
/// minority rows: each gets `needed / minority` samples and a seeded random
/// subset of `needed % minority` rows gets one more. Every sample lies on the
/// segment from its seed row to one of the seed row's `k` nearest minority
/// neighbours, at a uniform `[0, 1)` fraction. Synthetic rows keep the seed
/// row's group and are appended after the originals, ordered by (seed row,
/// draw).
pub fn smote(train: &Dataset, k: usize, seed: u64) -> Result<Dataset> {
    if k == 0 {
        return Err(Error::InvalidInput("SMOTE needs k >= 1".into()));
    }
    let x = train.to_matrix()?;
    let [neg, pos] = train.class_counts();
    if neg == pos {
        return Ok(train.clone());
    }
    let minority_label = u8::from(pos < neg);
    let minority: Vec<usize> = (0..train.n_rows())
        .filter(|&i| train.labels()[i] == minority_label)
        .collect();
    let n_min = minority.len();
    if n_min < 2 {
        return Err(Error::InvalidInput(format!(
            "minority class {minority_label} has {n_min} row(s); SMOTE needs at least 2"
        )));
    }
    if k >= n_min {
        return Err(Error::InvalidInput(format!(
            "k_smote = {k} but the minority class only has {} other rows",
            n_min - 1
        )));
    }
    let needed = neg.max(pos) - n_min;
    let neighbours = nearest_within(&x.select_rows(&minority), k);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_row = vec![needed / n_min; n_min];
    for p in index::sample(&mut rng, n_min, needed % n_min) {
        per_row[p] += 1;
    }

    let mut synthetic = Matrix::zeros(0, x.ncols());
    let mut labels = train.labels().to_vec();
    let mut groups = train.groups().to_vec();
    let mut origins = train.origins().to_vec();
    let mut sample = vec![0.0; x.ncols()];
    for (p, &count) in per_row.iter().enumerate() {
        let base = minority[p];
        for draw in 0..count {
            let other = minority[neighbours[p][rng.gen_range(0..k)]];
            let gap: f64 = rng.gen();
            for ((s, &a), &b) in sample.iter_mut().zip(x.row(base)).zip(x.row(other)) {
                *s = a + gap * (b - a);
            }
            synthetic.push_row(&sample)?;
            labels.push(minority_label);
            groups.push(train.groups()[base]);
            let seed_row = match train.origins()[base] {
                RowOrigin::Source(i) => i,
                RowOrigin::Synthetic { seed_row, .. } => seed_row,
            };
            origins.push(RowOrigin::Synthetic { seed_row, draw });
        }
    }

    let columns = x_columns_with(&x, &synthetic);
    Dataset::with_origins(
        columns,
        train.feature_names().to_vec(),
        labels,
        groups,
        train.group_table().clone(),
        origins,
        train.schema_name(),
    )
}

fn x_columns_with(x: &Matrix, extra: &Matrix) -> Vec<FeatureColumn> {
    (0..x.ncols())
        .map(|j| FeatureColumn::Numeric(x.column(j).chain(extra.column(j)).map(Some).collect()))
        .collect()
}

/// Removes every row whose label differs from the majority label of its `k`
/// nearest neighbours. Rows with a tied vote are kept.
pub fn edited_nearest_neighbours(d: &Dataset, k: usize) -> Result<Dataset> {
    if k == 0 {
        return Err(Error::InvalidInput("ENN needs k >= 1".into()));
    }
    if k >= d.n_rows() {
        return Err(Error::InvalidInput(format!(
            "k_enn = {k} but only {} other rows exist",
            d.n_rows().saturating_sub(1)
        )));
    }
    let x = d.to_matrix()?;
    let labels = d.labels();
    let keep: Vec<usize> = nearest_within(&x, k)
        .iter()
        .enumerate()
        .filter(|(i, nn)| {
            let disagree = nn.iter().filter(|&&j| labels[j] != labels[*i]).count();
            2 * disagree <= k
        })
        .map(|(i, _)| i)
        .collect();
    Ok(d.select_rows(&keep))
}

/// SMOTE to equal class counts, then ENN cleaning over originals and
/// synthetic rows together. Deterministic for a fixed seed.
pub fn smote_enn(train: &Dataset, k_smote: usize, k_enn: usize, seed: u64) -> Result<Dataset> {
    let oversampled = smote(train, k_smote, seed)?;
    edited_nearest_neighbours(&oversampled, k_enn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{GroupCode, GroupTable};

    fn make(points: &[(f64, f64, u8)]) -> Dataset {
        let m = Matrix::from_rows(
            &points
                .iter()
                .map(|&(a, b, _)| vec![a, b])
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let labels = points.iter().map(|p| p.2).collect();
        let groups = (0..points.len())
            .map(|i| GroupCode((i % 2) as u16))
            .collect();
        Dataset::from_matrix(
            &m,
            vec!["a".into(), "b".into()],
            labels,
            groups,
            GroupTable::new("s", "p", "u"),
            "custom",
        )
        .unwrap()
    }

    fn clusters(n_neg: usize, n_pos: usize) -> Dataset {
        let mut pts = Vec::new();
        for i in 0..n_neg {
            pts.push((0.1 * i as f64, 0.05 * (i % 3) as f64, 0));
        }
        for i in 0..n_pos {
            pts.push((10.0 + 0.1 * i as f64, 10.0 + 0.05 * (i % 4) as f64, 1));
        }
        make(&pts)
    }

    #[test]
    fn balanced_separated_data_is_unchanged() {
        let d = clusters(6, 6);
        let out = smote_enn(&d, 3, 3, 1).unwrap();
        assert_eq!(out, d);
    }

    #[test]
    fn smote_equalises_counts() {
        let d = clusters(10, 5);
        let out = smote(&d, 3, 9).unwrap();
        assert_eq!(out.class_counts(), [10, 10]);
        assert_eq!(out.n_rows(), 20);
        // originals first, untouched
        assert_eq!(out.select_rows(&(0..15).collect::<Vec<_>>()), d);
    }

    #[test]
    fn synthetic_rows_inherit_seed_group() {
        let d = clusters(10, 5);
        let out = smote(&d, 2, 4).unwrap();
        for i in d.n_rows()..out.n_rows() {
            let RowOrigin::Synthetic { seed_row, .. } = out.origins()[i] else {
                panic!("expected synthetic row")
            };
            assert_eq!(out.groups()[i], d.groups()[seed_row]);
        }
    }

    #[test]
    fn mislabeled_row_in_opposite_cluster_is_removed() {
        let mut pts = vec![
            (0.0, 0.0, 0),
            (0.1, 0.0, 0),
            (0.0, 0.1, 0),
            (0.1, 0.1, 0),
            (0.05, 0.05, 1),
        ];
        pts.extend([(5.0, 5.0, 1), (5.1, 5.0, 1), (5.0, 5.1, 1), (5.1, 5.1, 1)]);
        let d = make(&pts);
        let out = edited_nearest_neighbours(&d, 3).unwrap();
        assert_eq!(out.n_rows(), 8);
        assert!(!out.origins().contains(&RowOrigin::Source(4)));
    }

    #[test]
    fn tied_vote_keeps_row() {
        // row 0's two neighbours split 1-1
        let d = make(&[(0.0, 0.0, 0), (1.0, 0.0, 0), (-1.0, 0.0, 1), (9.0, 9.0, 1)]);
        let out = edited_nearest_neighbours(&d, 2).unwrap();
        assert!(out.origins().contains(&RowOrigin::Source(0)));
    }

    #[test]
    fn rejects_tiny_minority_and_large_k() {
        let d = clusters(5, 1);
        assert!(smote(&d, 1, 0).is_err());
        let d = clusters(5, 3);
        assert!(smote(&d, 3, 0).is_err());
        assert!(smote(&d, 2, 0).is_ok());
        assert!(edited_nearest_neighbours(&d, 8).is_err());
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let d = clusters(17, 6);
        assert_eq!(
            smote_enn(&d, 3, 3, 5).unwrap(),
            smote_enn(&d, 3, 3, 5).unwrap()
        );
        assert_ne!(smote(&d, 3, 5).unwrap(), smote(&d, 3, 6).unwrap());
    }
}
