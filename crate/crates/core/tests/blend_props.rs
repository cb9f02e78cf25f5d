use fairbayes::blended::{
    blend, blend_log_odds, select_alpha, BlendConfig, PipelineOptions, DEFAULT_ALPHA_GRID,
};
use fairbayes::{BlendedModel, Dataset, GroupCode, GroupTable, Matrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRID: [f64; 5] = DEFAULT_ALPHA_GRID;

fn prob_pair() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..=1.0).prop_map(|p| [1.0 - p, p])
}

/// Two groups, both classes well above the default support floor in each.
fn two_group_data(seed: u64, n_per_cell: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut groups = Vec::new();
    for g in 0..2u16 {
        for y in 0..2u8 {
            let shift = if g == 0 { 1.0 } else { -0.5 } * f64::from(y);
            for _ in 0..n_per_cell {
                rows.push(vec![
                    shift + rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0) + 0.3 * f64::from(g),
                ]);
                labels.push(y);
                groups.push(GroupCode(g));
            }
        }
    }
    Dataset::from_matrix(
        &Matrix::from_rows(&rows).unwrap(),
        vec!["a".into(), "b".into()],
        labels,
        groups,
        GroupTable::new("g", "p", "u"),
        "custom",
    )
    .unwrap()
}

proptest! {
    #[test]
    fn blends_are_probability_vectors(group in prob_pair(), global in prob_pair(), a in 0usize..5) {
        let p = blend(group, global, GRID[a]);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert!((p[0] + p[1] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn blends_over_continuous_alpha_are_probability_vectors(
        group in prob_pair(),
        global in prob_pair(),
        alpha in 0.0f64..=1.0,
    ) {
        let p = blend(group, global, alpha);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert!((p[0] + p[1] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn endpoints_bit_match(group in prob_pair(), global in prob_pair()) {
        prop_assert_eq!(blend(group, global, 0.0), global);
        prop_assert_eq!(blend(group, global, 1.0), group);
    }

    #[test]
    fn each_class_moves_monotonically_in_alpha(group in prob_pair(), global in prob_pair()) {
        for c in 0..2 {
            let path: Vec<f64> = GRID.iter().map(|&a| blend(group, global, a)[c]).collect();
            let rising = group[c] >= global[c];
            for w in path.windows(2) {
                if rising {
                    prop_assert!(w[1] >= w[0]);
                } else {
                    prop_assert!(w[1] <= w[0]);
                }
            }
            let (lo, hi) = (group[c].min(global[c]), group[c].max(global[c]));
            prop_assert!(path.iter().all(|&v| v >= lo - 1e-15 && v <= hi + 1e-15));
        }
    }

    #[test]
    fn log_odds_endpoints_are_exact(
        g in prob_pair().prop_filter("interior", |p| p[0] > 0.0 && p[1] > 0.0),
        h in prob_pair().prop_filter("interior", |p| p[0] > 0.0 && p[1] > 0.0),
    ) {
        let gl = [g[0].ln(), g[1].ln()];
        let hl = [h[0].ln(), h[1].ln()];
        prop_assert_eq!(blend_log_odds(gl, hl, 0.0), hl[1] - hl[0]);
        prop_assert_eq!(blend_log_odds(gl, hl, 1.0), gl[1] - gl[0]);
        let mid = blend(g, h, 0.5);
        prop_assert!((blend_log_odds(gl, hl, 0.5) - (mid[1].ln() - mid[0].ln())).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trained_model_endpoints_match_components(
        seed in any::<u64>(),
        x0 in -2.0f64..2.0,
        x1 in -2.0f64..2.0,
    ) {
        let data = two_group_data(seed, 40);
        let m = BlendedModel::train(&data, &BlendConfig::default()).unwrap();
        prop_assert_eq!(m.eligible_groups().len(), 2);
        let x = [x0, x1];
        for g in [GroupCode(0), GroupCode(1)] {
            let global = m.global_model().proba_pair(&x).unwrap();
            let own = m.group_models()[&g].proba_pair(&x).unwrap();
            prop_assert_eq!(m.clone().with_alpha(0.0).unwrap().blend_proba(&x, g).unwrap(), global);
            prop_assert_eq!(m.clone().with_alpha(1.0).unwrap().blend_proba(&x, g).unwrap(), own);
            for &a in &GRID {
                let p = m.clone().with_alpha(a).unwrap().blend_proba(&x, g).unwrap();
                prop_assert!(p.iter().all(|&v| v >= 0.0));
                prop_assert!((p[0] + p[1] - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn unseen_groups_resolve_to_the_global_model(seed in any::<u64>(), code in 2u16..500) {
        let data = two_group_data(seed, 40);
        let m = BlendedModel::train(&data, &BlendConfig::default()).unwrap();
        let x = [0.1, -0.2];
        let global = m.global_model().proba_pair(&x).unwrap();
        for &a in &GRID {
            let p = m.clone().with_alpha(a).unwrap().blend_proba(&x, GroupCode(code)).unwrap();
            prop_assert_eq!(p, global);
        }
    }
}

#[test]
fn support_floor_boundary() {
    let config = BlendConfig::default();
    let floor = config.min_support;
    for (per_cell, eligible) in [(floor, true), (floor - 1, false)] {
        let data = two_group_data(7, per_cell.max(floor));
        // trim group 1's positives down to `per_cell`
        let mut seen = 0;
        let keep: Vec<usize> = (0..data.n_rows())
            .filter(|&i| {
                if data.groups()[i] == GroupCode(1) && data.labels()[i] == 1 {
                    seen += 1;
                    seen <= per_cell
                } else {
                    true
                }
            })
            .collect();
        let m = BlendedModel::train(&data.select_rows(&keep), &config).unwrap();
        assert_eq!(
            m.eligible_groups().contains(&GroupCode(1)),
            eligible,
            "{per_cell}"
        );
        assert!(m.eligible_groups().contains(&GroupCode(0)));
    }
}

#[test]
fn alpha_unset_is_an_error() {
    let m = BlendedModel::train(&two_group_data(1, 40), &BlendConfig::default()).unwrap();
    assert!(m.blend_proba(&[0.0, 0.0], GroupCode(0)).is_err());
}

#[test]
fn selection_is_deterministic() {
    let data = two_group_data(11, 60);
    let options = PipelineOptions::default();
    let a = select_alpha(&data, &GRID, 0.5, 5, 3, &options).unwrap();
    let b = select_alpha(&data, &GRID, 0.5, 5, 3, &options).unwrap();
    assert_eq!(a, b);
    assert!(GRID.contains(&a.chosen_alpha));
    for s in &a.scores {
        let j = 0.5 * s.cv_accuracy + 0.5 * s.cv_fairness.unwrap();
        assert!((s.objective.unwrap() - j).abs() < 1e-15);
    }
    let single = select_alpha(&data, &[0.5], 0.5, 5, 3, &options).unwrap();
    assert_eq!(single.chosen_alpha, 0.5);
}

#[test]
fn serialized_model_round_trips() {
    let m = BlendedModel::train(&two_group_data(5, 40), &BlendConfig::default())
        .unwrap()
        .with_alpha(0.25)
        .unwrap();
    assert_eq!(BlendedModel::from_json(&m.to_json()).unwrap(), m);
}
