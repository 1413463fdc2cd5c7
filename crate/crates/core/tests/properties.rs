mod common;

use std::collections::BTreeSet;

use dtlet::cca::{self, Regularization};
use dtlet::classify::{self, aggregate_category_accuracy, SvmModel, TaskAccuracy};
use dtlet::data::{self, CoScope, Domain, DomainDataset, SplitRatios, Standardizer};
use dtlet::matcher::{self, joint_objective};
use dtlet::{Matrix, Vector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matrix(rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> impl Strategy<Value = Matrix> {
    (rows, cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-50.0f64..50.0, r * c).prop_map(move |v| Matrix::from_row_slice(r, c, &v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standardization_is_idempotent(m in matrix(2..30, 1..6)) {
        let (once, _) = data::standardize(&m).unwrap();
        let (twice, _) = data::standardize(&once).unwrap();
        prop_assert!((&once - &twice).amax() < 1e-10);
    }

    #[test]
    fn standardizer_reuse_matches_fit(m in matrix(3..20, 1..5), shift in -5.0f64..5.0) {
        let st = Standardizer::fit(&m).unwrap();
        let moved = m.map(|v| v + shift);
        let direct = st.apply(&moved).unwrap();
        let base = st.apply(&m).unwrap();
        for j in 0..m.ncols() {
            let expected = shift / st.stds[j];
            for i in 0..m.nrows() {
                prop_assert!((direct[(i, j)] - base[(i, j)] - expected).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn enumerated_plans_satisfy_invariants(a in 2usize..=5, b in 2usize..=5, full in any::<bool>()) {
        let plans = matcher::enumerate_matchings(a, b, full).unwrap();
        prop_assert!(!plans.is_empty());
        let distinct: BTreeSet<_> = plans.iter().map(|p| p.pairs.clone()).collect();
        prop_assert_eq!(distinct.len(), plans.len());
        for p in &plans {
            prop_assert!(p.validate(true).is_ok());
            prop_assert!(p.pairs.contains(&(a, b)));
            prop_assert!(p.m() < a.min(b));
            prop_assert!(!full || p.is_full_rank());
            let back: matcher::MatchingPlan = p.to_string().parse().unwrap();
            prop_assert_eq!(&back, p);
        }
    }

    #[test]
    fn svm_predictions_invariant_under_positive_scaling(
        w in prop::collection::vec(-3.0f64..3.0, 3),
        bias in -2.0f64..2.0,
        scale in 0.01f64..100.0,
        x in matrix(1..20, 3..4),
    ) {
        let model = SvmModel {
            weights: Vector::from_vec(w),
            bias,
            c: 1.0,
            class_pair: (0, 1),
            dual_objective: 0.0,
            duality_gap: 0.0,
            epochs: 0,
        };
        let scaled = SvmModel { weights: &model.weights * scale, bias: bias * scale, ..model.clone() };
        // skip points essentially on the boundary
        let margins = &x * &model.weights;
        prop_assume!(margins.iter().all(|m| (m + bias).abs() > 1e-9));
        prop_assert_eq!(classify::predict(&model, &x).unwrap(), classify::predict(&scaled, &x).unwrap());
    }

    #[test]
    fn cca_is_symmetric_in_views(seed in any::<u64>(), noise in 0.2f64..3.0) {
        let (a, b) = common::correlated_views(60, 5, 4, 2, noise, seed);
        let ab = cca::fit(&a, &b, 3, Regularization::Auto, true).unwrap();
        let ba = cca::fit(&b, &a, 3, Regularization::Auto, true).unwrap();
        for j in 0..3 {
            prop_assert!((ab.correlations[j] - ba.correlations[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn cca_correlations_invariant_under_affine_maps(seed in any::<u64>()) {
        let (a, b) = common::correlated_views(80, 4, 3, 2, 1.0, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let mut t = common::gaussian(&mut rng, 4, 4);
        for i in 0..4 {
            t[(i, i)] += 3.0;
        }
        prop_assume!(t.determinant().abs() > 1e-3);
        let offset: Vec<f64> = (0..4).map(|_| rng.random_range(-10.0..10.0)).collect();
        let mut moved = &a * &t;
        for i in 0..moved.nrows() {
            for j in 0..4 {
                moved[(i, j)] += offset[j];
            }
        }
        let base = cca::fit(&a, &b, 3, Regularization::Fixed(0.0), true).unwrap();
        let tr = cca::fit(&moved, &b, 3, Regularization::Fixed(0.0), true).unwrap();
        for j in 0..3 {
            prop_assert!((base.correlations[j] - tr.correlations[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn splits_are_disjoint_and_cover_task(seed in any::<u64>(), pair in (0i32..4, 0i32..4), global in any::<bool>()) {
        prop_assume!(pair.0 != pair.1);
        let n = 80;
        let labels: Vec<i32> = (0..n).map(|i| (i % 4) as i32).collect();
        let s = DomainDataset::new(Matrix::from_fn(n, 2, |i, j| (i * 2 + j) as f64), labels.clone(), Domain::Source).unwrap();
        let t = DomainDataset::new(Matrix::from_fn(n, 3, |i, j| (i * 3 + j) as f64), labels.clone(), Domain::Target).unwrap();
        let scope = if global { CoScope::Global } else { CoScope::Task };
        let split = data::split_trial_scoped(&s, &t, pair, SplitRatios::default(), scope, seed).unwrap();
        let co: BTreeSet<usize> = split.co_idx.iter().copied().collect();
        let tr: BTreeSet<usize> = split.train_idx.iter().copied().collect();
        let te: BTreeSet<usize> = split.test_idx.iter().copied().collect();
        prop_assert!(co.is_disjoint(&tr) && co.is_disjoint(&te) && tr.is_disjoint(&te));
        for &i in tr.iter().chain(&te) {
            prop_assert!(labels[i] == pair.0 || labels[i] == pair.1);
        }
        if !global {
            let task: BTreeSet<usize> = (0..n).filter(|&i| labels[i] == pair.0 || labels[i] == pair.1).collect();
            let all: BTreeSet<usize> = co.union(&tr).copied().collect::<BTreeSet<_>>().union(&te).copied().collect();
            prop_assert_eq!(all, task);
        }
        // rows follow the indices in both domains
        for (r, &i) in split.co_idx.iter().enumerate() {
            prop_assert_eq!(split.co_source[(r, 0)], s.features[(i, 0)]);
            prop_assert_eq!(split.co_target[(r, 0)], t.features[(i, 0)]);
        }
    }

    #[test]
    fn category_means_stay_within_task_range(accs in prop::collection::vec(0.0f64..=1.0, 45)) {
        let mut tasks = Vec::new();
        let mut k = 0;
        for a in 0..10 {
            for b in a + 1..10 {
                tasks.push(TaskAccuracy { pair: (a, b), accuracy: accs[k] });
                k += 1;
            }
        }
        let table = aggregate_category_accuracy(&tasks);
        prop_assert!(!table.incomplete);
        for (&class, &mean) in &table.per_class {
            let own: Vec<f64> = tasks.iter().filter(|t| t.pair.0 == class || t.pair.1 == class).map(|t| t.accuracy).collect();
            let lo = own.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = own.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(mean >= lo - 1e-12 && mean <= hi + 1e-12);
        }
        let overall = table.mean();
        prop_assert!((0.0..=1.0).contains(&overall));
    }

    #[test]
    fn objective_monotone_in_parts(ls in 0.0f64..100.0, lt in 0.0f64..100.0, p in 0.01f64..90.0, d in 0.01f64..10.0) {
        prop_assert!(joint_objective(ls, lt, p + d) < joint_objective(ls, lt, p));
        prop_assert!(joint_objective(ls + d, lt, p) > joint_objective(ls, lt, p));
        prop_assert!(joint_objective(ls, lt + d, p) > joint_objective(ls, lt, p));
        prop_assert!(joint_objective(ls, lt, 0.0).is_infinite());
    }
}
