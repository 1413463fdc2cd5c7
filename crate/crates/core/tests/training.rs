mod common;

use dtlet::classify;
use dtlet::data::{self, SplitRatios};
use dtlet::derive_seed;
use dtlet::harness::{self, ExperimentConfig, Method};
use dtlet::matcher::{self, MatchingPlan, TrainConfig, WidthPlan};
use dtlet::sae;
use dtlet::Matrix;

fn small_config(top: usize) -> TrainConfig {
    TrainConfig {
        widths: WidthPlan::new(top),
        seed: 17,
        ..TrainConfig::default()
    }
}

#[test]
fn coupling_raises_correlation_on_shared_latent() {
    let (s, t) = common::latent_views(240, 3, 30, 12, 1.0, 0.5, 4);
    let (co_s, _) = data::standardize(&s.features).unwrap();
    let (co_t, _) = data::standardize(&t.features).unwrap();
    let plan: MatchingPlan = "2-2,3-3".parse().unwrap();
    let model = matcher::train_joint(&plan, &co_s, &co_t, &small_config(4)).unwrap();
    let first = model.correlation_trace[0];
    let last = *model.correlation_trace.last().unwrap();
    assert!(last > first, "P went from {first} to {last}");
    assert!(model.loss_trace.iter().all(|v| v.is_finite()));
}

#[test]
fn training_is_deterministic() {
    let (s, t) = common::latent_views(120, 2, 20, 9, 1.0, 0.5, 2);
    let plan: MatchingPlan = "2-2,3-3".parse().unwrap();
    let cfg = small_config(4);
    let a = matcher::train_joint(&plan, &s.features, &t.features, &cfg).unwrap();
    let b = matcher::train_joint(&plan, &s.features, &t.features, &cfg).unwrap();
    assert_eq!(a.loss_trace, b.loss_trace);
    assert_eq!(a.theta_source, b.theta_source);
    let other = matcher::train_joint(&plan, &s.features, &t.features, &TrainConfig { seed: 18, ..cfg }).unwrap();
    assert_ne!(a.loss_trace, other.loss_trace);
}

#[test]
fn zero_iterations_return_initialization() {
    let (s, t) = common::latent_views(60, 2, 10, 6, 1.0, 0.5, 1);
    let plan: MatchingPlan = "3-2".parse().unwrap();
    let cfg = TrainConfig {
        max_iters: 0,
        ..small_config(3)
    };
    let m = matcher::train_joint(&plan, &s.features, &t.features, &cfg).unwrap();
    let ws = cfg.widths.widths(dtlet::data::Domain::Source, 10, 3);
    let init = sae::init_network(&ws, derive_seed(cfg.seed, &[1])).unwrap();
    assert_eq!(m.theta_source, init);
    assert_eq!(m.iterations, 0);
    assert_eq!(m.loss_trace.len(), 1);
    assert_eq!(m.projections.len(), 1);
    let recomputed = matcher::evaluate_objective(&m, &s.features, &t.features).unwrap();
    assert!((recomputed - m.objective).abs() < 1e-9 * m.objective.abs().max(1.0));
}

#[test]
fn reported_objective_matches_recomputation() {
    let (s, t) = common::latent_views(100, 2, 12, 8, 1.0, 0.5, 6);
    let plan: MatchingPlan = "2-2,3-3".parse().unwrap();
    let m = matcher::train_joint(&plan, &s.features, &t.features, &small_config(4)).unwrap();
    let recomputed = matcher::evaluate_objective(&m, &s.features, &t.features).unwrap();
    assert!((recomputed - m.objective).abs() < 1e-9 * m.objective.abs());
}

fn synthetic_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        method: Method::DtLet,
        source_depths: vec![2, 3],
        target_depths: vec![2, 3],
        class_pairs: Some(vec![(0, 1)]),
        repeats: 3,
        seed: 3,
        ..ExperimentConfig::default()
    };
    cfg.train.widths = WidthPlan::new(8);
    cfg
}

#[test]
fn heterogeneous_views_transfer_beats_raw_features() {
    let (s, t) = common::latent_views(400, 12, 100, 40, 2.0, 0.5, 12);
    let mut cfg = synthetic_config();
    cfg.train.widths = WidthPlan::new(12);
    let report = harness::run_on(&s, &t, &cfg).unwrap();
    assert!(report.excluded.is_empty());
    let dtlet_acc = report.mean_accuracy();

    // no transfer: source-trained SVM applied to zero-padded target rows
    let mut raw = Vec::new();
    for repeat in 0..cfg.repeats {
        let seed = harness::trial_seed(cfg.seed, (0, 1), repeat);
        let split = data::split_trial(&s, &t, (0, 1), SplitRatios::default(), seed)
            .unwrap()
            .standardized()
            .unwrap();
        let svm = classify::train_binary(&split.train_source, &split.train_labels, (0, 1), 1.0).unwrap();
        let padded = Matrix::from_fn(split.test_target.nrows(), split.train_source.ncols(), |i, j| {
            if j < split.test_target.ncols() {
                split.test_target[(i, j)]
            } else {
                0.0
            }
        });
        let pred = classify::predict_labels(&svm, &padded).unwrap();
        raw.push(classify::accuracy(&pred, &split.test_labels));
    }
    let raw_acc = raw.iter().sum::<f64>() / raw.len() as f64;
    println!("DT-LET {dtlet_acc:.4}  raw {raw_acc:.4}");
    assert!(dtlet_acc >= 0.85, "DT-LET accuracy {dtlet_acc}");
    assert!(raw_acc <= 0.65, "raw accuracy {raw_acc}");
}

#[test]
fn harness_outputs_are_reproducible() {
    let (s, t) = common::latent_views(200, 3, 24, 10, 1.5, 0.5, 5);
    let mut cfg = synthetic_config();
    cfg.source_depths = vec![3];
    cfg.target_depths = vec![2, 3];
    cfg.repeats = 2;

    let dir = tempfile::tempdir().unwrap();
    let a = harness::run_on(&s, &t, &cfg).unwrap();
    harness::write_outputs(&a, dir.path()).unwrap();
    let csv_a = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(dir.path().join("summary.txt").exists());
    let jsonl = std::fs::read_to_string(dir.path().join("trials.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 2);

    cfg.jobs = 2;
    let b = harness::run_on(&s, &t, &cfg).unwrap();
    assert_eq!(csv_a, harness::render_report_csv(&b));

    let baseline = harness::run_on(&s, &t, &ExperimentConfig { method: Method::CcaSvm, ..cfg.clone() }).unwrap();
    assert_eq!(baseline.records.len(), 2);
    assert!(baseline.records.iter().all(|r| r.plan.is_none()));

    let none = harness::run_on(&s, &t, &ExperimentConfig { method: Method::NoneDtLet, none_depth: 3, ..cfg }).unwrap();
    assert!(none.records.iter().all(|r| r.plan.as_deref() == Some("r2_{3,3}[2-2,3-3]")));
}

#[test]
fn checkpoint_survives_a_file_roundtrip() {
    let (s, t) = common::latent_views(60, 2, 10, 6, 1.0, 0.5, 7);
    let plan: MatchingPlan = "2-2,3-3".parse().unwrap();
    let m = matcher::train_joint(&plan, &s.features, &t.features, &small_config(3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("source.sae");
    let mut f = std::fs::File::create(&path).unwrap();
    m.theta_source.write_checkpoint(&mut f).unwrap();
    drop(f);
    let back = sae::NetworkParams::read_checkpoint(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(back.widths, m.theta_source.widths);
    let x = m.theta_source.reconstruct(&s.features).unwrap();
    let y = back.reconstruct(&s.features).unwrap();
    assert!((x - y).amax() < 1e-12);
}
