use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{compute_metrics, EvalReport, ExperimentConfig, HarnessError};
use crate::fusion::{Adam, FusionError, FusionNet, Network};
use crate::ingest::ModalityBundle;
use crate::{rng, Label, Modality};

/// One labelled video with its extracted features.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub label: Label,
    pub bundle: ModalityBundle,
}

/// Anything the training loop can drive.
pub trait Classifier: Send {
    /// One optimisation step on a mini-batch; returns the mean batch loss.
    /// A non-finite loss must be reported before any parameter changes.
    fn fit_batch(&mut self, batch: &[&Sample]) -> Result<f64, HarnessError>;

    /// Probability that `sample` is PCL.
    fn predict_proba(&self, sample: &Sample) -> Result<f64, HarnessError>;
}

/// A fusion network trained with Adam on the mean binary cross-entropy.
#[derive(Debug, Clone)]
pub struct NetworkClassifier<N: Network> {
    pub model: N,
    optimizer: Adam,
    dropout_rng: ChaCha8Rng,
}

impl<N: Network> NetworkClassifier<N> {
    pub fn new(model: N, learning_rate: f64, seed: u64) -> Self {
        Self { model, optimizer: Adam::new(learning_rate), dropout_rng: rng::stream(seed, "dropout", 0) }
    }

    pub fn into_model(self) -> N {
        self.model
    }
}

impl NetworkClassifier<FusionNet> {
    /// Fresh network for `config`; `index` separates the initialisations of
    /// different folds.
    pub fn from_config(
        config: &ExperimentConfig,
        input_dims: &BTreeMap<Modality, usize>,
        index: u64,
    ) -> Result<Self, HarnessError> {
        let seed = rng::derive_seed(config.seed, "model", index);
        let model = FusionNet::new(config.variant, config.fusion_config(input_dims), seed)?;
        Ok(Self::new(model, config.learning_rate, seed))
    }
}

impl<N: Network> Classifier for NetworkClassifier<N> {
    fn fit_batch(&mut self, batch: &[&Sample]) -> Result<f64, HarnessError> {
        if batch.is_empty() {
            return Err(HarnessError::Contract("empty mini-batch".into()));
        }
        let scale = 1.0 / batch.len() as f64;
        let use_dropout = self.model.config().dropout > 0.0;
        let mut grads = self.model.zeros_like();
        let mut loss = 0.0;
        for s in batch {
            let rng: Option<&mut dyn rand::RngCore> = if use_dropout { Some(&mut self.dropout_rng) } else { None };
            loss += scale * self.model.accumulate_gradients(&s.bundle, s.label, scale, &mut grads, rng)?;
        }
        if !loss.is_finite() {
            return Err(HarnessError::NonFinite(format!("loss is {loss}")));
        }
        grads.ensure_finite().map_err(|e| HarnessError::NonFinite(e.to_string()))?;
        self.optimizer.step(&mut self.model, &grads);
        self.model.ensure_finite().map_err(|e| match e {
            FusionError::NonFiniteGradient(name) => HarnessError::NonFinite(format!("parameter {name} after update")),
            other => other.into(),
        })?;
        Ok(loss)
    }

    fn predict_proba(&self, sample: &Sample) -> Result<f64, HarnessError> {
        Ok(self.model.forward(&sample.bundle)?.probability)
    }
}

/// Metrics after one training epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean training loss over the epoch's samples.
    pub loss: f64,
    pub report: EvalReport,
}

/// Probabilities and thresholded scores for `samples`.
pub fn evaluate<C: Classifier + ?Sized>(
    model: &C,
    samples: &[&Sample],
    threshold: f64,
) -> Result<(EvalReport, Vec<f64>), HarnessError> {
    let probs = samples.iter().map(|s| model.predict_proba(s)).collect::<Result<Vec<_>, _>>()?;
    let predictions: Vec<Label> = probs.iter().map(|&p| Label::from(p >= threshold)).collect();
    let labels: Vec<Label> = samples.iter().map(|s| s.label).collect();
    Ok((compute_metrics(&predictions, &labels)?, probs))
}

/// Train `model` for `config.epochs` epochs of seeded, shuffled mini-batches,
/// scoring `eval` after every epoch (the training set itself when `eval` is
/// empty). `stream` separates the shuffling of independent runs.
pub fn train_one<C: Classifier + ?Sized>(
    config: &ExperimentConfig,
    train: &[&Sample],
    eval: &[&Sample],
    model: &mut C,
    stream: u64,
) -> Result<Vec<EpochRecord>, HarnessError> {
    config.validate()?;
    if train.is_empty() {
        return Err(HarnessError::Data("training set is empty".into()));
    }
    if !train.iter().any(|s| s.label.is_positive()) || train.iter().all(|s| s.label.is_positive()) {
        return Err(HarnessError::Data("training set must contain both classes".into()));
    }
    let eval = if eval.is_empty() { train } else { eval };
    let mut shuffle = rng::stream(config.seed, "shuffle", stream);
    let mut order: Vec<&Sample> = train.to_vec();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for (batch_index, batch) in order.chunks(config.batch_size).enumerate() {
            let loss = model.fit_batch(batch).map_err(|e| HarnessError::Training {
                epoch,
                batch: batch_index,
                message: e.to_string(),
            })?;
            total += loss * batch.len() as f64;
        }
        let (report, _) = evaluate(model, eval, config.threshold)?;
        log::debug!("epoch {epoch}: loss {:.5} F1_p {:.2}", total / order.len() as f64, report.metrics.f1);
        trace.push(EpochRecord { epoch, loss: total / order.len() as f64, report });
    }
    Ok(trace)
}
