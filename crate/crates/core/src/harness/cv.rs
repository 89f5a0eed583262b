use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    train_one, Classifier, EpochRecord, ExperimentConfig, HarnessError, Metrics, NetworkClassifier, Sample, TopMode,
};
use crate::corpus::stratified_folds;
use crate::{rng, Label, Modality};

/// Held-out scores of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// Epochs (1-based) whose scores were averaged.
    pub epochs: Vec<usize>,
    #[serde(flatten)]
    pub metrics: Metrics,
}

/// Cross-validated scores for one subset and fusion variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub subset: String,
    pub variant: String,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub per_fold: Vec<FoldReport>,
}

/// A cross-validation run with every fold's epoch trace kept.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub report: CvReport,
    pub traces: Vec<Vec<EpochRecord>>,
}

/// Indices of the `m` epochs with the highest F1_p; ties keep the earlier
/// epoch. Returned in epoch order.
pub fn top_epochs(f1: &[f64], m: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..f1.len()).collect();
    order.sort_by(|&a, &b| f1[b].total_cmp(&f1[a]).then(a.cmp(&b)));
    order.truncate(m);
    order.sort_unstable();
    order
}

/// Overall scores plus each fold's selected epochs and scores.
pub fn aggregate_top_m(traces: &[Vec<EpochRecord>], m: usize, mode: TopMode) -> (Metrics, Vec<(Vec<usize>, Metrics)>) {
    let fold_scores = |picks: &[usize], trace: &[EpochRecord]| Metrics::mean(picks.iter().map(|&i| &trace[i].report.metrics));
    let per_fold: Vec<(Vec<usize>, Metrics)> = match mode {
        TopMode::PerFold => traces
            .iter()
            .map(|t| {
                let picks = top_epochs(&t.iter().map(|r| r.report.metrics.f1).collect::<Vec<_>>(), m);
                let scores = fold_scores(&picks, t);
                (picks, scores)
            })
            .collect(),
        TopMode::AcrossFolds => {
            let epochs = traces.iter().map(Vec::len).min().unwrap_or(0);
            let mean_f1: Vec<f64> = (0..epochs)
                .map(|e| traces.iter().map(|t| t[e].report.metrics.f1).sum::<f64>() / traces.len() as f64)
                .collect();
            let picks = top_epochs(&mean_f1, m);
            traces.iter().map(|t| (picks.clone(), fold_scores(&picks, t))).collect()
        }
    };
    let overall = Metrics::mean(per_fold.iter().map(|(_, s)| s));
    let per_fold = per_fold.into_iter().map(|(p, s)| (p.into_iter().map(|i| i + 1).collect(), s)).collect();
    (overall, per_fold)
}

/// Raw feature widths shared by every sample of `corpus`.
pub fn corpus_dims(corpus: &[Sample]) -> Result<BTreeMap<Modality, usize>, HarnessError> {
    let first = corpus.first().ok_or_else(|| HarnessError::Data("corpus is empty".into()))?;
    let dims = first.bundle.dims();
    if let Some(s) = corpus.iter().find(|s| s.bundle.dims() != dims) {
        return Err(HarnessError::Data(format!("sample {} has feature widths {:?}, expected {:?}", s.id, s.bundle.dims(), dims)));
    }
    Ok(dims)
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))
}

/// k-fold cross-validation of the configured fusion network.
pub fn cross_validate(config: &ExperimentConfig, corpus: &[Sample]) -> Result<CvReport, HarnessError> {
    let dims = corpus_dims(corpus)?;
    Ok(cross_validate_with(config, corpus, |fold| NetworkClassifier::from_config(config, &dims, fold as u64))?.report)
}

/// k-fold cross-validation with a classifier built per fold by `make`.
/// Folds run on `config.jobs` threads; results do not depend on the count.
pub fn cross_validate_with<C, F>(config: &ExperimentConfig, corpus: &[Sample], make: F) -> Result<CvOutcome, HarnessError>
where
    C: Classifier,
    F: Fn(usize) -> Result<C, HarnessError> + Sync,
{
    config.validate()?;
    let mut seen = HashSet::new();
    if let Some(s) = corpus.iter().find(|s| !seen.insert(s.id.as_str())) {
        return Err(HarnessError::Data(format!("sample id {} appears twice", s.id)));
    }
    let labels: Vec<Label> = corpus.iter().map(|s| s.label).collect();
    let folds = stratified_folds(&labels, config.folds, rng::derive_seed(config.seed, "folds", 0))?;

    let run_fold = |(i, fold): (usize, &crate::corpus::Fold)| -> Result<(usize, usize, Vec<EpochRecord>), HarnessError> {
        let train: Vec<&Sample> = fold.train.iter().map(|&j| &corpus[j]).collect();
        let test: Vec<&Sample> = fold.test.iter().map(|&j| &corpus[j]).collect();
        let train_ids: HashSet<&str> = train.iter().map(|s| s.id.as_str()).collect();
        if test.iter().any(|s| train_ids.contains(s.id.as_str())) {
            return Err(HarnessError::Data(format!("fold {i} evaluates a training sample")));
        }
        let mut model = make(i)?;
        let trace = train_one(config, &train, &test, &mut model, i as u64)
            .map_err(|e| HarnessError::Fold { fold: i + 1, source: Box::new(e) })?;
        Ok((train.len(), test.len(), trace))
    };
    let runs: Vec<_> = if config.jobs == 1 {
        folds.iter().enumerate().map(run_fold).collect::<Result<_, _>>()?
    } else {
        thread_pool(config.jobs)?.install(|| folds.par_iter().enumerate().map(run_fold).collect::<Result<_, _>>())?
    };

    let traces: Vec<Vec<EpochRecord>> = runs.iter().map(|(_, _, t)| t.clone()).collect();
    let (metrics, picks) = aggregate_top_m(&traces, config.top_m, config.top_mode);
    let per_fold = runs
        .iter()
        .zip(picks)
        .enumerate()
        .map(|(i, ((train_size, test_size, _), (epochs, metrics)))| FoldReport {
            fold: i + 1,
            train_size: *train_size,
            test_size: *test_size,
            epochs,
            metrics,
        })
        .collect();
    let report = CvReport { subset: config.subset.key().to_string(), variant: config.variant.to_string(), metrics, per_fold };
    Ok(CvOutcome { report, traces })
}
