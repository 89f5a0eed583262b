use std::collections::BTreeMap;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use super::attention::{mhca, AttentionBlock, MhcaOutput};
use super::loss::sigmoid;
use super::{FusionConfig, FusionError, Linear, Pair};
use crate::ingest::ModalityBundle;
use crate::{rng, Modality};

/// Parameters of the attention fusion classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    pub config: FusionConfig,
    /// Input projection per modality, `input_dim → model_dim`.
    pub projections: BTreeMap<Modality, Linear>,
    /// One block per pair in `config.pair_list()` order, or a single block
    /// when attention is shared.
    pub blocks: Vec<AttentionBlock>,
    /// `model_dim → 1`
    pub head: Linear,
}

/// Result for one modality pair.
#[derive(Debug, Clone)]
pub struct PairOutput {
    pub pair: Pair,
    /// `None` when either side has no rows; the pair then pools to zero.
    pub attention: Option<MhcaOutput>,
    pub pooled: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct FusionOutput {
    pub pairs: Vec<PairOutput>,
    /// Unified representation: the sum of the pooled pair vectors.
    pub representation: Array1<f64>,
    pub logit: f64,
    pub probability: f64,
}

/// Inverted-dropout mask over the representation, or `None` when inactive.
pub(crate) fn dropout_mask(len: usize, rate: f64, rng: Option<&mut dyn rand::RngCore>) -> Option<Array1<f64>> {
    let rng = rng?;
    if rate <= 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - rate);
    Some(Array1::from_shape_fn(len, |_| if rng.gen::<f64>() < rate { 0.0 } else { keep }))
}

pub(crate) fn bundle_inputs(
    bundle: &ModalityBundle,
    config: &FusionConfig,
) -> Result<BTreeMap<Modality, Array2<f64>>, FusionError> {
    config
        .modalities
        .iter()
        .map(|m| {
            let features = bundle
                .get(m)
                .ok_or_else(|| FusionError::Config(format!("bundle has no {m} features")))?;
            if features.ncols() != config.input_dim(m) {
                return Err(FusionError::Config(format!(
                    "{m} features have {} columns, model expects {}",
                    features.ncols(),
                    config.input_dim(m)
                )));
            }
            Ok((m, features.mapv(f64::from)))
        })
        .collect()
}

pub(crate) struct Trace {
    inputs: BTreeMap<Modality, Array2<f64>>,
    projected: BTreeMap<Modality, Array2<f64>>,
    dropout: Option<Array1<f64>>,
    head_input: Array1<f64>,
    pub output: FusionOutput,
}

impl FusionModel {
    pub fn new(config: FusionConfig, seed: u64) -> Result<Self, FusionError> {
        config.validate()?;
        let mut rng = rng::stream(seed, "fusion-init", 0);
        let d = config.model_dim;
        let projections = config.modalities.iter().map(|m| (m, Linear::glorot(config.input_dim(m), d, &mut rng))).collect();
        let n_blocks = if config.shared_attention { 1 } else { config.pair_list().len() };
        let blocks = (0..n_blocks).map(|_| AttentionBlock::glorot(d, &mut rng)).collect();
        let head = Linear::glorot(d, 1, &mut rng);
        Ok(Self { config, projections, blocks, head })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            projections: self.projections.iter().map(|(&m, l)| (m, Linear::zeros(l.weight.nrows(), l.weight.ncols()))).collect(),
            blocks: self.blocks.iter().map(|b| AttentionBlock::zeros(b.dim())).collect(),
            head: Linear::zeros(self.head.weight.nrows(), 1),
        }
    }

    fn block_index(&self, pair_index: usize) -> usize {
        if self.config.shared_attention {
            0
        } else {
            pair_index
        }
    }

    fn block_name(&self, pair: Pair) -> String {
        if self.config.shared_attention {
            "attn.shared".into()
        } else {
            format!("attn.{}>{}", pair.0, pair.1)
        }
    }

    pub(crate) fn trace(
        &self,
        bundle: &ModalityBundle,
        dropout_rng: Option<&mut dyn rand::RngCore>,
    ) -> Result<Trace, FusionError> {
        let inputs = bundle_inputs(bundle, &self.config)?;
        let projected: BTreeMap<Modality, Array2<f64>> =
            inputs.iter().map(|(m, x)| (*m, self.projections[m].forward(x.view()))).collect();
        let masks: BTreeMap<Modality, Vec<bool>> = if self.config.mask_empty_faces {
            inputs
                .get(&Modality::Face)
                .map(|x| (Modality::Face, x.rows().into_iter().map(|r| r.iter().all(|&v| v == 0.0)).collect()))
                .into_iter()
                .collect()
        } else {
            BTreeMap::new()
        };

        let d = self.config.model_dim;
        let mut representation = Array1::zeros(d);
        let mut pairs = Vec::new();
        for (idx, pair) in self.config.pair_list().into_iter().enumerate() {
            let (qm, km) = pair;
            let (query, keys) = (&projected[&qm], &projected[&km]);
            let attention = if query.nrows() == 0 || keys.nrows() == 0 {
                None
            } else {
                let mask = masks.get(&km).map(Vec::as_slice);
                Some(mhca(query.view(), keys.view(), &self.blocks[self.block_index(idx)], self.config.heads, mask)?)
            };
            let pooled = match &attention {
                Some(a) => a.output.mean_axis(Axis(0)).expect("non-empty"),
                None => Array1::zeros(d),
            };
            representation += &pooled;
            pairs.push(PairOutput { pair, attention, pooled });
        }

        let dropout = dropout_mask(d, self.config.dropout, dropout_rng);
        let head_input = match &dropout {
            Some(mask) => &representation * mask,
            None => representation.clone(),
        };
        let logit = head_input.dot(&self.head.weight.column(0)) + self.head.bias[0];
        let output = FusionOutput { pairs, representation, logit, probability: sigmoid(logit) };
        Ok(Trace { inputs, projected, dropout, head_input, output })
    }

    /// Forward pass without dropout.
    pub fn forward(&self, bundle: &ModalityBundle) -> Result<FusionOutput, FusionError> {
        Ok(self.trace(bundle, None)?.output)
    }

    /// Backpropagate `dL/dlogit` through a recorded trace into `grads`.
    pub(crate) fn backward_trace(&self, trace: &Trace, grad_logit: f64, grads: &mut FusionModel) {
        let d = self.config.model_dim;
        grads.head.weight.column_mut(0).scaled_add(grad_logit, &trace.head_input);
        grads.head.bias[0] += grad_logit;
        let mut g_repr = self.head.weight.column(0).to_owned() * grad_logit;
        if let Some(mask) = &trace.dropout {
            g_repr *= mask;
        }

        let mut g_projected: BTreeMap<Modality, Array2<f64>> =
            trace.projected.iter().map(|(&m, p)| (m, Array2::zeros(p.raw_dim()))).collect();
        for (idx, out) in trace.output.pairs.iter().enumerate() {
            let Some(attention) = &out.attention else { continue };
            let (qm, km) = out.pair;
            let n_q = attention.output.nrows();
            let g_out = Array2::from_shape_fn((n_q, d), |(_, c)| g_repr[c] / n_q as f64);
            let b = self.block_index(idx);
            let (g_q, g_kv) = attention.backward(
                trace.projected[&qm].view(),
                trace.projected[&km].view(),
                &self.blocks[b],
                g_out.view(),
                &mut grads.blocks[b],
            );
            *g_projected.get_mut(&qm).unwrap() += &g_q;
            *g_projected.get_mut(&km).unwrap() += &g_kv;
        }
        for (m, g) in g_projected {
            let proj = &self.projections[&m];
            proj.backward(trace.inputs[&m].view(), g.view(), grads.projections.get_mut(&m).unwrap());
        }
    }

    pub fn parameters(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (m, l) in &self.projections {
            l.slices(&format!("proj.{m}"), &mut out);
        }
        let pairs = self.config.pair_list();
        for (i, b) in self.blocks.iter().enumerate() {
            b.slices(&self.block_name(pairs[i]), &mut out);
        }
        self.head.slices("head", &mut out);
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let pairs = self.config.pair_list();
        let names: Vec<String> = (0..self.blocks.len()).map(|i| self.block_name(pairs[i])).collect();
        let mut out = Vec::new();
        for (m, l) in self.projections.iter_mut() {
            l.slices_mut(&format!("proj.{m}"), &mut out);
        }
        for (b, name) in self.blocks.iter_mut().zip(names) {
            b.slices_mut(&name, &mut out);
        }
        self.head.slices_mut("head", &mut out);
        out
    }

    pub fn parameter_shapes(&self) -> Vec<(String, (usize, usize))> {
        let mut out = Vec::new();
        for (m, l) in &self.projections {
            l.shapes(&format!("proj.{m}"), &mut out);
        }
        let pairs = self.config.pair_list();
        for (i, b) in self.blocks.iter().enumerate() {
            b.shapes(&self.block_name(pairs[i]), &mut out);
        }
        self.head.shapes("head", &mut out);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.projections.values().map(Linear::parameter_count).sum::<usize>()
            + self.blocks.iter().map(AttentionBlock::parameter_count).sum::<usize>()
            + self.head.parameter_count()
    }
}

/// Forward pass of the attention fusion model; `config` must be the one the
/// model was built with.
pub fn fuse(bundle: &ModalityBundle, model: &FusionModel, config: &FusionConfig) -> Result<FusionOutput, FusionError> {
    if &model.config != config {
        return Err(FusionError::Config("model was built for a different configuration".into()));
    }
    model.forward(bundle)
}
