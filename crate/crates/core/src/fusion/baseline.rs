use ndarray::{Array1, Array2, Axis};

use super::loss::sigmoid;
use super::model::{bundle_inputs, dropout_mask};
use super::{FusionConfig, FusionError, FusionOutput, Linear};
use crate::ingest::ModalityBundle;
use crate::rng;

/// Attention-free ablation: mean-pool every modality, concatenate, one fully
/// connected layer of width `model_dim`, then the logit head.
#[derive(Debug, Clone, PartialEq)]
pub struct FcModel {
    pub config: FusionConfig,
    /// `sum(input_dims) → model_dim`
    pub fc: Linear,
    pub head: Linear,
}

pub(crate) struct FcTrace {
    pooled: Array2<f64>,
    dropout: Option<Array1<f64>>,
    head_input: Array1<f64>,
    pub output: FusionOutput,
}

impl FcModel {
    pub fn new(config: FusionConfig, seed: u64) -> Result<Self, FusionError> {
        config.validate()?;
        let mut rng = rng::stream(seed, "fc-init", 0);
        let fan_in: usize = config.modalities.iter().map(|m| config.input_dim(m)).sum();
        let fc = Linear::glorot(fan_in, config.model_dim, &mut rng);
        let head = Linear::glorot(config.model_dim, 1, &mut rng);
        Ok(Self { config, fc, head })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            fc: Linear::zeros(self.fc.weight.nrows(), self.fc.weight.ncols()),
            head: Linear::zeros(self.head.weight.nrows(), 1),
        }
    }

    pub(crate) fn trace(
        &self,
        bundle: &ModalityBundle,
        dropout_rng: Option<&mut dyn rand::RngCore>,
    ) -> Result<FcTrace, FusionError> {
        let inputs = bundle_inputs(bundle, &self.config)?;
        let mut pooled = Vec::with_capacity(self.fc.weight.nrows());
        for x in inputs.values() {
            match x.mean_axis(Axis(0)) {
                Some(mean) => pooled.extend(mean.iter()),
                None => pooled.extend(std::iter::repeat_n(0.0, x.ncols())),
            }
        }
        let pooled = Array2::from_shape_vec((1, pooled.len()), pooled).expect("row vector");
        let hidden = self.fc.forward(pooled.view()).index_axis_move(Axis(0), 0);
        let dropout = dropout_mask(hidden.len(), self.config.dropout, dropout_rng);
        let head_input = match &dropout {
            Some(mask) => &hidden * mask,
            None => hidden.clone(),
        };
        let logit = head_input.dot(&self.head.weight.column(0)) + self.head.bias[0];
        let output = FusionOutput { pairs: vec![], representation: hidden, logit, probability: sigmoid(logit) };
        Ok(FcTrace { pooled, dropout, head_input, output })
    }

    pub fn forward(&self, bundle: &ModalityBundle) -> Result<FusionOutput, FusionError> {
        Ok(self.trace(bundle, None)?.output)
    }

    pub(crate) fn backward_trace(&self, trace: &FcTrace, grad_logit: f64, grads: &mut FcModel) {
        grads.head.weight.column_mut(0).scaled_add(grad_logit, &trace.head_input);
        grads.head.bias[0] += grad_logit;
        let mut g_hidden = self.head.weight.column(0).to_owned() * grad_logit;
        if let Some(mask) = &trace.dropout {
            g_hidden *= mask;
        }
        let g_hidden = g_hidden.insert_axis(Axis(0));
        self.fc.backward(trace.pooled.view(), g_hidden.view(), &mut grads.fc);
    }

    pub fn parameters(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        self.fc.slices("fc", &mut out);
        self.head.slices("head", &mut out);
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::new();
        self.fc.slices_mut("fc", &mut out);
        self.head.slices_mut("head", &mut out);
        out
    }

    pub fn parameter_shapes(&self) -> Vec<(String, (usize, usize))> {
        let mut out = Vec::new();
        self.fc.shapes("fc", &mut out);
        self.head.shapes("head", &mut out);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.fc.parameter_count() + self.head.parameter_count()
    }
}

pub fn fc_fusion_baseline(bundle: &ModalityBundle, model: &FcModel) -> Result<FusionOutput, FusionError> {
    model.forward(bundle)
}
