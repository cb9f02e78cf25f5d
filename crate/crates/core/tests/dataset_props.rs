use std::collections::BTreeSet;

use fairbayes::dataset::{
    complement, load_dataset, stratified_folds, stratified_split, FeatureColumn, RowOrigin,
    SensitiveSpec, TargetSpec,
};
use fairbayes::{Dataset, DatasetSchema, Error, GroupCode, GroupTable, Matrix};
use proptest::prelude::*;

fn schema() -> DatasetSchema {
    DatasetSchema {
        name: "toy".into(),
        delimiter: ',',
        target: TargetSpec {
            column: "y".into(),
            positive: vec![">50K".into()],
        },
        sensitive: SensitiveSpec {
            column: "sex".into(),
            privileged: "Male".into(),
            unprivileged: vec!["Female".into()],
            exclude: vec![],
        },
        numeric: vec!["age".into()],
        categorical: vec!["job".into()],
        missing: vec!["?".into()],
    }
}

/// Dataset with the given (label, group) cell sizes and one numeric feature
/// holding the row index.
fn cells(sizes: &[((u8, u16), usize)]) -> Dataset {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut groups = Vec::new();
    for &((y, g), n) in sizes {
        for _ in 0..n {
            rows.push([rows.len() as f64]);
            labels.push(y);
            groups.push(GroupCode(g));
        }
    }
    Dataset::from_matrix(
        &Matrix::from_rows(&rows).unwrap(),
        vec!["i".into()],
        labels,
        groups,
        GroupTable::new("g", "p", "u"),
        "cells",
    )
    .unwrap()
}

fn cell_sizes() -> impl Strategy<Value = Vec<((u8, u16), usize)>> {
    sized_cells(2)
}

fn sized_cells(min: usize) -> impl Strategy<Value = Vec<((u8, u16), usize)>> {
    prop::collection::vec(min..60, 4).prop_map(|n| {
        vec![
            ((0, 0), n[0]),
            ((0, 1), n[1]),
            ((1, 0), n[2]),
            ((1, 1), n[3]),
        ]
    })
}

fn ids(d: &Dataset) -> Vec<usize> {
    d.origins()
        .iter()
        .map(|o| match o {
            RowOrigin::Source(i) => *i,
            RowOrigin::Synthetic { .. } => unreachable!(),
        })
        .collect()
}

proptest! {
    #[test]
    fn split_partitions_rows_and_keeps_strata(
        sizes in cell_sizes(),
        fraction in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let d = cells(&sizes);
        let (train, test) = stratified_split(&d, fraction, seed).unwrap();
        let a: BTreeSet<usize> = ids(&train).into_iter().collect();
        let b: BTreeSet<usize> = ids(&test).into_iter().collect();
        prop_assert_eq!(a.len(), train.n_rows());
        prop_assert_eq!(b.len(), test.n_rows());
        prop_assert!(a.is_disjoint(&b));
        prop_assert_eq!(a.len() + b.len(), d.n_rows());

        let test_strata = test.strata();
        for (key, rows) in d.strata() {
            let got = test_strata.get(&key).map_or(0, Vec::len);
            let ideal = fraction * rows.len() as f64;
            prop_assert!((got as f64 - ideal).abs() <= 1.0, "{:?}: {} vs {}", key, got, ideal);
        }
        // both sides keep the input order
        prop_assert!(ids(&train).windows(2).all(|w| w[0] < w[1]));
        prop_assert!(ids(&test).windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn split_is_deterministic(sizes in cell_sizes(), seed in any::<u64>()) {
        let d = cells(&sizes);
        let first = stratified_split(&d, 0.2, seed).unwrap();
        let second = stratified_split(&d, 0.2, seed).unwrap();
        prop_assert_eq!(first.1.row_set_hash(), second.1.row_set_hash());
        prop_assert_eq!(first, second);
    }

    #[test]
    fn folds_partition_rows(sizes in sized_cells(5), k in 2usize..=5, seed in any::<u64>()) {
        let d = cells(&sizes);
        let folds = stratified_folds(&d, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..d.n_rows()).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for f in &folds {
            let rest = complement(d.n_rows(), f);
            prop_assert_eq!(rest.len() + f.len(), d.n_rows());
            // every stratum appears in every held-out fold
            let held = d.select_rows(f);
            prop_assert_eq!(held.strata().len(), 4);
        }
    }

    #[test]
    fn loading_identical_bytes_is_deterministic(
        rows in prop::collection::vec((0u8..90, any::<bool>(), any::<bool>(), 0usize..3), 1..40),
    ) {
        let mut text = String::from("age,job,sex,y\n");
        for (age, male, rich, job) in &rows {
            text.push_str(&format!(
                "{age},{},{},{}\n",
                ["a", "b", "?"][*job],
                if *male { "Male" } else { "Female" },
                if *rich { ">50K" } else { "<=50K" }
            ));
        }
        let a = load_dataset(text.as_bytes(), &schema()).unwrap();
        let b = load_dataset(text.as_bytes(), &schema()).unwrap();
        prop_assert_eq!(a.row_set_hash(), b.row_set_hash());
        prop_assert_eq!(a, b);
    }
}

#[test]
fn toy_file_loads_with_codes_and_missing_cells() {
    let text = "age,job,sex,y\n\
                39,clerk,Male,<=50K\n\
                50,?,Female,>50K\n\
                ?,exec,Female,<=50K\n\
                28,clerk,Male,>50K\n";
    let d = load_dataset(text.as_bytes(), &schema()).unwrap();
    assert_eq!(d.n_rows(), 4);
    assert_eq!(d.labels(), &[0, 1, 0, 1]);
    assert_eq!(
        d.groups(),
        &[
            GroupCode::PRIVILEGED,
            GroupCode::UNPRIVILEGED,
            GroupCode::UNPRIVILEGED,
            GroupCode::PRIVILEGED
        ]
    );
    assert_eq!(d.feature_names(), &["age".to_string(), "job".to_string()]);
    match &d.columns()[0] {
        FeatureColumn::Numeric(v) => assert_eq!(v, &[Some(39.0), Some(50.0), None, Some(28.0)]),
        other => panic!("{other:?}"),
    }
    match &d.columns()[1] {
        FeatureColumn::Categorical(v) => {
            assert_eq!(v[1], None);
            assert_eq!(v[2].as_deref(), Some("exec"));
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(
        d.columns()[0].missing_count() + d.columns()[1].missing_count(),
        2
    );
}

#[test]
fn missing_target_or_sensitive_drops_the_row() {
    let text = "age,job,sex,y\n1,a,?,>50K\n2,a,Male,?\n3,a,Male,>50K\n";
    let d = load_dataset(text.as_bytes(), &schema()).unwrap();
    assert_eq!(d.n_rows(), 1);
    assert_eq!(d.origins(), &[RowOrigin::Source(2)]);
}

#[test]
fn unknown_sensitive_value_is_a_schema_error() {
    let text = "age,job,sex,y\n1,a,Other,>50K\n";
    assert!(matches!(
        load_dataset(text.as_bytes(), &schema()),
        Err(Error::Schema(_))
    ));
    let mut s = schema();
    s.sensitive.exclude.push("Other".into());
    assert_eq!(load_dataset(text.as_bytes(), &s).unwrap().n_rows(), 0);
}

#[test]
fn absent_column_is_a_schema_error() {
    let text = "age,sex,y\n1,Male,>50K\n";
    assert!(matches!(
        load_dataset(text.as_bytes(), &schema()),
        Err(Error::Schema(_))
    ));
}

#[test]
fn four_strata_of_twenty_five_give_five_test_rows_each() {
    let d = cells(&[((0, 0), 25), ((0, 1), 25), ((1, 0), 25), ((1, 1), 25)]);
    let (train, test) = stratified_split(&d, 0.2, 42).unwrap();
    assert_eq!((train.n_rows(), test.n_rows()), (80, 20));
    for rows in test.strata().values() {
        assert_eq!(rows.len(), 5);
    }
}

#[test]
fn odd_stratum_rounds_to_twenty_or_twenty_one() {
    let d = cells(&[((0, 0), 101), ((0, 1), 2), ((1, 0), 2), ((1, 1), 2)]);
    let (_, test) = stratified_split(&d, 0.2, 3).unwrap();
    let big = test.strata()[&(0, GroupCode(0))].len();
    assert!(big == 20 || big == 21, "{big}");
}

#[test]
fn single_row_stratum_is_rejected() {
    let d = cells(&[((0, 0), 10), ((0, 1), 1), ((1, 0), 10), ((1, 1), 10)]);
    assert!(matches!(
        stratified_split(&d, 0.2, 1),
        Err(Error::StratumTooSmall { size: 1, .. })
    ));
    assert!(stratified_split(&d, 1.0, 1).is_err());
}

#[test]
fn row_set_hash_ignores_order() {
    let d = cells(&[((0, 0), 3), ((1, 1), 3)]);
    let shuffled = d.select_rows(&[5, 0, 3, 1, 4, 2]);
    assert_eq!(d.row_set_hash(), shuffled.row_set_hash());
    assert_ne!(d.row_set_hash(), d.select_rows(&[0, 1]).row_set_hash());
}
