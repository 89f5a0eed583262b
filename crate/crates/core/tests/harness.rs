mod common;

use std::collections::HashSet;
use std::sync::{Arc, Mutex};

use multipcl::harness::stubs::{ConstantClassifier, OracleClassifier};
use multipcl::harness::synthetic::{agreement, separable, SyntheticDims};
use multipcl::harness::{
    aggregate_top_m, compute_metrics, cross_validate, cross_validate_with, render_table, run_ablation_grid,
    train_one, write_records, Classifier, EpochRecord, EvalReport, ExperimentConfig, HarnessError,
    NetworkClassifier, Sample, TopMode,
};
use multipcl::fusion::FusionVariant;
use common::metric_reference as reference;
use multipcl::Label;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labels(bits: &[bool]) -> Vec<Label> {
    bits.iter().map(|&b| Label::from(b)).collect()
}

#[test]
fn metrics_match_reference_on_random_batches() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let n = r.gen_range(1..60);
        let bias = r.gen::<f64>();
        let pred: Vec<bool> = (0..n).map(|_| r.gen_bool(bias)).collect();
        let truth: Vec<bool> = (0..n).map(|_| r.gen_bool(0.4)).collect();
        let m = compute_metrics(&labels(&pred), &labels(&truth)).unwrap();
        let got = [m.metrics.precision, m.metrics.recall, m.metrics.f1, m.metrics.f1_macro, m.metrics.accuracy];
        assert_eq!(got, reference(&pred, &truth));
        assert_eq!(m.total(), n);
    }
}

#[test]
fn f1_is_harmonic_mean_when_defined() {
    let r = EvalReport::from_counts(7, 3, 5, 9);
    let (p, rc) = (r.metrics.precision, r.metrics.recall);
    assert!((r.metrics.f1 - 2.0 * p * rc / (p + rc)).abs() < 1e-12);
}

proptest! {
    #[test]
    fn metrics_are_permutation_invariant(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..80), seed in any::<u64>()) {
        let (pred, truth): (Vec<bool>, Vec<bool>) = pairs.iter().cloned().unzip();
        let a = compute_metrics(&labels(&pred), &labels(&truth)).unwrap();
        let mut shuffled = pairs.clone();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, r.gen_range(0..=i));
        }
        let (pred, truth): (Vec<bool>, Vec<bool>) = shuffled.into_iter().unzip();
        prop_assert_eq!(a, compute_metrics(&labels(&pred), &labels(&truth)).unwrap());
        for v in [a.metrics.precision, a.metrics.recall, a.metrics.f1, a.metrics.f1_macro, a.metrics.accuracy] {
            prop_assert!((0.0..=100.0).contains(&v));
        }
    }

    #[test]
    fn top_m_extremes(f1 in proptest::collection::vec(proptest::collection::vec(0.0f64..100.0, 6), 1..4)) {
        let traces: Vec<Vec<EpochRecord>> = f1.iter().map(|fold| fold.iter().enumerate().map(|(i, &f)| {
            let mut report = EvalReport::default();
            report.metrics.f1 = f;
            report.metrics.accuracy = f / 2.0;
            EpochRecord { epoch: i + 1, loss: 0.0, report }
        }).collect()).collect();
        let (best, _) = aggregate_top_m(&traces, 1, TopMode::PerFold);
        let expect_best = f1.iter().map(|fold| fold.iter().cloned().fold(f64::MIN, f64::max)).sum::<f64>() / f1.len() as f64;
        prop_assert!((best.f1 - expect_best).abs() < 1e-9);
        let (all, _) = aggregate_top_m(&traces, 6, TopMode::PerFold);
        let expect_all = f1.iter().map(|fold| fold.iter().sum::<f64>() / 6.0).sum::<f64>() / f1.len() as f64;
        prop_assert!((all.f1 - expect_all).abs() < 1e-9);
        prop_assert!((all.accuracy - expect_all / 2.0).abs() < 1e-9);
    }
}

fn small_config() -> ExperimentConfig {
    ExperimentConfig { model_dim: 16, heads: 2, ..Default::default() }
}

#[test]
fn oracle_and_constant_stubs() {
    let corpus = separable(60, 0, SyntheticDims::default(), 0.5).unwrap();
    let cfg = small_config();
    let oracle = cross_validate_with(&cfg, &corpus, |_| Ok(OracleClassifier)).unwrap().report;
    for v in [oracle.metrics.precision, oracle.metrics.recall, oracle.metrics.f1, oracle.metrics.f1_macro, oracle.metrics.accuracy] {
        assert_eq!(v, 100.0);
    }
    let (corpus, _) = agreement(60, 0, SyntheticDims::default(), 0.3).unwrap();
    let never = cross_validate_with(&cfg, &corpus, |_| Ok(ConstantClassifier(0.0))).unwrap().report;
    assert_eq!(never.metrics.recall, 0.0);
    // every fold holds 8 negatives out of 12
    assert!((never.metrics.accuracy - 100.0 * 40.0 / 60.0).abs() < 1e-9);
    assert_eq!(never.per_fold.len(), 5);
}

/// Records every id it is trained on or asked to score.
struct Spy {
    trained: Arc<Mutex<HashSet<String>>>,
    scored: Arc<Mutex<HashSet<String>>>,
}

impl Classifier for Spy {
    fn fit_batch(&mut self, batch: &[&Sample]) -> Result<f64, HarnessError> {
        self.trained.lock().unwrap().extend(batch.iter().map(|s| s.id.clone()));
        Ok(0.5)
    }

    fn predict_proba(&self, sample: &Sample) -> Result<f64, HarnessError> {
        self.scored.lock().unwrap().insert(sample.id.clone());
        Ok(0.5)
    }
}

#[test]
fn held_out_samples_are_never_trained_on() {
    let corpus = separable(40, 2, SyntheticDims::default(), 0.5).unwrap();
    let cfg = ExperimentConfig { epochs: 2, top_m: 1, ..small_config() };
    let logs: Vec<_> = (0..cfg.folds).map(|_| (Arc::default(), Arc::default())).collect();
    cross_validate_with(&cfg, &corpus, |fold| {
        let (t, s): &(Arc<Mutex<HashSet<String>>>, Arc<Mutex<HashSet<String>>>) = &logs[fold];
        Ok(Spy { trained: t.clone(), scored: s.clone() })
    })
    .unwrap();
    let mut all_scored = HashSet::new();
    for (trained, scored) in &logs {
        let (trained, scored) = (trained.lock().unwrap(), scored.lock().unwrap());
        assert!(trained.is_disjoint(&scored));
        assert_eq!(trained.len() + scored.len(), 40);
        all_scored.extend(scored.iter().cloned());
    }
    assert_eq!(all_scored.len(), 40);
}

#[test]
fn duplicate_ids_are_rejected() {
    let mut corpus = separable(20, 2, SyntheticDims::default(), 0.5).unwrap();
    corpus[3].id = corpus[4].id.clone();
    let cfg = ExperimentConfig { epochs: 1, top_m: 1, ..small_config() };
    assert!(matches!(cross_validate_with(&cfg, &corpus, |_| Ok(OracleClassifier)), Err(HarnessError::Data(_))));
}

#[test]
fn train_one_learns_separable_bundles() {
    let corpus = separable(60, 3, SyntheticDims::default(), 0.5).unwrap();
    let train: Vec<&Sample> = corpus.iter().collect();
    let cfg = ExperimentConfig { model_dim: 32, heads: 2, seed: 3, ..Default::default() };
    let dims = corpus[0].bundle.dims();
    let mut model = NetworkClassifier::from_config(&cfg, &dims, 0).unwrap();
    let trace = train_one(&cfg, &train, &[], &mut model, 0).unwrap();
    assert_eq!(trace.len(), 20);
    assert!(trace.last().unwrap().report.metrics.f1 >= 95.0, "{:?}", trace.last());
    assert!(trace.last().unwrap().loss < trace[0].loss);

    let mut again = NetworkClassifier::from_config(&cfg, &dims, 0).unwrap();
    assert_eq!(trace, train_one(&cfg, &train, &[], &mut again, 0).unwrap());
}

#[test]
fn train_one_preconditions() {
    let corpus = separable(20, 3, SyntheticDims::default(), 0.5).unwrap();
    let dims = corpus[0].bundle.dims();
    let cfg = small_config();
    let mut model = NetworkClassifier::from_config(&cfg, &dims, 0).unwrap();
    let zero = ExperimentConfig { epochs: 0, ..cfg.clone() };
    let all: Vec<&Sample> = corpus.iter().collect();
    assert!(matches!(train_one(&zero, &all, &[], &mut model, 0), Err(HarnessError::Config(_))));
    let positives: Vec<&Sample> = corpus.iter().filter(|s| s.label.is_positive()).collect();
    assert!(matches!(train_one(&cfg, &positives, &[], &mut model, 0), Err(HarnessError::Data(_))));
    assert!(matches!(train_one(&cfg, &[], &[], &mut model, 0), Err(HarnessError::Data(_))));
}

/// Loss turns NaN on the second batch of the second epoch.
struct Exploding(usize);

impl Classifier for Exploding {
    fn fit_batch(&mut self, _batch: &[&Sample]) -> Result<f64, HarnessError> {
        self.0 += 1;
        if self.0 == 5 {
            return Err(HarnessError::NonFinite("loss is NaN".into()));
        }
        Ok(1.0)
    }

    fn predict_proba(&self, _sample: &Sample) -> Result<f64, HarnessError> {
        Ok(0.5)
    }
}

#[test]
fn non_finite_loss_names_epoch_and_batch() {
    let corpus = separable(30, 3, SyntheticDims::default(), 0.5).unwrap();
    let all: Vec<&Sample> = corpus.iter().collect();
    match train_one(&small_config(), &all, &[], &mut Exploding(0), 0) {
        Err(HarnessError::Training { epoch, batch, .. }) => assert_eq!((epoch, batch), (2, 1)),
        other => panic!("expected a training error, got {other:?}"),
    }
}

#[test]
fn network_rejects_nan_features_at_the_bundle() {
    let mut corpus = separable(10, 3, SyntheticDims::default(), 0.5).unwrap();
    let mut x = corpus[0].bundle.video().unwrap().to_owned();
    x[[0, 0]] = f32::NAN;
    assert!(corpus[0].bundle.insert(multipcl::Modality::Video, x).is_err());
}

#[test]
fn grid_rows_are_keyed_verbatim_and_deterministic() {
    let (corpus, _) = agreement(60, 5, SyntheticDims::default(), 0.3).unwrap();
    let cfg = ExperimentConfig { epochs: 3, top_m: 2, ..small_config() };
    let subsets = multipcl::harness::parse_subsets("V,T,V+T").unwrap();
    let variants = [FusionVariant::Mhca, FusionVariant::Fc];
    let rows = run_ablation_grid(&corpus, &cfg, &subsets, &variants).unwrap();
    let keys: Vec<(&str, &str)> = rows.iter().map(|r| (r.subset.as_str(), r.variant.as_str())).collect();
    assert_eq!(keys, [("V", "mhca"), ("V", "fc"), ("T", "mhca"), ("T", "fc"), ("V+T", "mhca"), ("V+T", "fc")]);
    let again = run_ablation_grid(&corpus, &cfg, &subsets, &variants).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_records(&mut a, &rows).unwrap();
    write_records(&mut b, &again).unwrap();
    assert_eq!(a, b);
    assert_eq!(render_table(&rows).lines().count(), 7);
}

#[test]
fn jobs_do_not_change_results() {
    let corpus = separable(30, 1, SyntheticDims::default(), 0.5).unwrap();
    let cfg = ExperimentConfig { epochs: 2, top_m: 1, ..small_config() };
    let serial = cross_validate(&cfg, &corpus).unwrap();
    let parallel = cross_validate(&ExperimentConfig { jobs: 3, ..cfg }, &corpus).unwrap();
    assert_eq!(serial, parallel);
}

#[test]
fn across_folds_mode_uses_one_epoch_set() {
    let corpus = separable(30, 1, SyntheticDims::default(), 0.5).unwrap();
    let cfg = ExperimentConfig { epochs: 4, top_m: 2, top_mode: TopMode::AcrossFolds, ..small_config() };
    let report = cross_validate(&cfg, &corpus).unwrap();
    let first = &report.per_fold[0].epochs;
    assert_eq!(first.len(), 2);
    assert!(report.per_fold.iter().all(|f| &f.epochs == first));
}
