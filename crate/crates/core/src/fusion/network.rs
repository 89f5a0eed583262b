use rand::RngCore;

use super::baseline::FcModel;
use super::loss::{sigmoid, softplus};
use super::model::FusionModel;
use super::{FusionConfig, FusionError, FusionOutput, FusionVariant};
use crate::ingest::ModalityBundle;
use crate::Label;

/// A trainable binary classifier over modality bundles whose gradients have
/// the same shape as the model itself.
pub trait Network: Clone + Send + Sync {
    fn config(&self) -> &FusionConfig;

    fn variant(&self) -> FusionVariant;

    fn forward(&self, bundle: &ModalityBundle) -> Result<FusionOutput, FusionError>;

    /// Add `scale * dL/dθ` for one sample's loss into `grads` and return the
    /// loss. Dropout is active only when `dropout_rng` is given.
    fn accumulate_gradients(
        &self,
        bundle: &ModalityBundle,
        label: Label,
        scale: f64,
        grads: &mut Self,
        dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<f64, FusionError>;

    fn zeros_like(&self) -> Self;

    fn parameters(&self) -> Vec<(String, &[f64])>;

    fn parameters_mut(&mut self) -> Vec<(String, &mut [f64])>;

    fn parameter_shapes(&self) -> Vec<(String, (usize, usize))>;

    fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|(_, p)| p.len()).sum()
    }

    /// Gradient of the single-sample loss for every parameter.
    fn backward(&self, bundle: &ModalityBundle, label: Label) -> Result<Self, FusionError> {
        let mut grads = self.zeros_like();
        self.accumulate_gradients(bundle, label, 1.0, &mut grads, None)?;
        grads.ensure_finite()?;
        Ok(grads)
    }

    /// Error naming the first parameter holding a non-finite value.
    fn ensure_finite(&self) -> Result<(), FusionError> {
        match self.parameters().into_iter().find(|(_, p)| p.iter().any(|v| !v.is_finite())) {
            Some((name, _)) => Err(FusionError::NonFiniteGradient(name)),
            None => Ok(()),
        }
    }

    fn add_scaled(&mut self, other: &Self, scale: f64) {
        for ((_, dst), (_, src)) in self.parameters_mut().into_iter().zip(other.parameters()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    fn squared_norm(&self) -> f64 {
        self.parameters().iter().flat_map(|(_, p)| p.iter()).map(|v| v * v).sum()
    }
}

fn sample_loss(logit: f64, label: Label) -> f64 {
    softplus(logit) - logit * label.as_f64()
}

impl Network for FusionModel {
    fn config(&self) -> &FusionConfig {
        &self.config
    }

    fn variant(&self) -> FusionVariant {
        FusionVariant::Mhca
    }

    fn forward(&self, bundle: &ModalityBundle) -> Result<FusionOutput, FusionError> {
        FusionModel::forward(self, bundle)
    }

    fn accumulate_gradients(
        &self,
        bundle: &ModalityBundle,
        label: Label,
        scale: f64,
        grads: &mut Self,
        dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<f64, FusionError> {
        let trace = self.trace(bundle, dropout_rng)?;
        let logit = trace.output.logit;
        self.backward_trace(&trace, scale * (sigmoid(logit) - label.as_f64()), grads);
        Ok(sample_loss(logit, label))
    }

    fn zeros_like(&self) -> Self {
        FusionModel::zeros_like(self)
    }

    fn parameters(&self) -> Vec<(String, &[f64])> {
        FusionModel::parameters(self)
    }

    fn parameters_mut(&mut self) -> Vec<(String, &mut [f64])> {
        FusionModel::parameters_mut(self)
    }

    fn parameter_shapes(&self) -> Vec<(String, (usize, usize))> {
        FusionModel::parameter_shapes(self)
    }
}

impl Network for FcModel {
    fn config(&self) -> &FusionConfig {
        &self.config
    }

    fn variant(&self) -> FusionVariant {
        FusionVariant::Fc
    }

    fn forward(&self, bundle: &ModalityBundle) -> Result<FusionOutput, FusionError> {
        FcModel::forward(self, bundle)
    }

    fn accumulate_gradients(
        &self,
        bundle: &ModalityBundle,
        label: Label,
        scale: f64,
        grads: &mut Self,
        dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<f64, FusionError> {
        let trace = self.trace(bundle, dropout_rng)?;
        let logit = trace.output.logit;
        self.backward_trace(&trace, scale * (sigmoid(logit) - label.as_f64()), grads);
        Ok(sample_loss(logit, label))
    }

    fn zeros_like(&self) -> Self {
        FcModel::zeros_like(self)
    }

    fn parameters(&self) -> Vec<(String, &[f64])> {
        FcModel::parameters(self)
    }

    fn parameters_mut(&mut self) -> Vec<(String, &mut [f64])> {
        FcModel::parameters_mut(self)
    }

    fn parameter_shapes(&self) -> Vec<(String, (usize, usize))> {
        FcModel::parameter_shapes(self)
    }
}

/// Either fusion variant behind one type.
#[derive(Debug, Clone, PartialEq)]
pub enum FusionNet {
    Mhca(FusionModel),
    Fc(FcModel),
}

impl FusionNet {
    pub fn new(variant: FusionVariant, config: FusionConfig, seed: u64) -> Result<Self, FusionError> {
        Ok(match variant {
            FusionVariant::Mhca => FusionNet::Mhca(FusionModel::new(config, seed)?),
            FusionVariant::Fc => FusionNet::Fc(FcModel::new(config, seed)?),
        })
    }
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            FusionNet::Mhca($m) => $body,
            FusionNet::Fc($m) => $body,
        }
    };
}

impl Network for FusionNet {
    fn config(&self) -> &FusionConfig {
        dispatch!(self, m => &m.config)
    }

    fn variant(&self) -> FusionVariant {
        dispatch!(self, m => Network::variant(m))
    }

    fn forward(&self, bundle: &ModalityBundle) -> Result<FusionOutput, FusionError> {
        dispatch!(self, m => m.forward(bundle))
    }

    fn accumulate_gradients(
        &self,
        bundle: &ModalityBundle,
        label: Label,
        scale: f64,
        grads: &mut Self,
        dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<f64, FusionError> {
        match (self, grads) {
            (FusionNet::Mhca(m), FusionNet::Mhca(g)) => m.accumulate_gradients(bundle, label, scale, g, dropout_rng),
            (FusionNet::Fc(m), FusionNet::Fc(g)) => m.accumulate_gradients(bundle, label, scale, g, dropout_rng),
            _ => Err(FusionError::Contract("gradient buffer belongs to the other variant".into())),
        }
    }

    fn zeros_like(&self) -> Self {
        match self {
            FusionNet::Mhca(m) => FusionNet::Mhca(m.zeros_like()),
            FusionNet::Fc(m) => FusionNet::Fc(m.zeros_like()),
        }
    }

    fn parameters(&self) -> Vec<(String, &[f64])> {
        dispatch!(self, m => m.parameters())
    }

    fn parameters_mut(&mut self) -> Vec<(String, &mut [f64])> {
        dispatch!(self, m => m.parameters_mut())
    }

    fn parameter_shapes(&self) -> Vec<(String, (usize, usize))> {
        dispatch!(self, m => m.parameter_shapes())
    }
}
