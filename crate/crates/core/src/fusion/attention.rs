use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;

use super::{FusionError, Linear};

/// Query, key, value and output projections of one attention block.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionBlock {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
}

impl AttentionBlock {
    pub fn zeros(dim: usize) -> Self {
        Self { query: Linear::zeros(dim, dim), key: Linear::zeros(dim, dim), value: Linear::zeros(dim, dim), output: Linear::zeros(dim, dim) }
    }

    pub fn glorot(dim: usize, rng: &mut impl Rng) -> Self {
        Self {
            query: Linear::glorot(dim, dim, rng),
            key: Linear::glorot(dim, dim, rng),
            value: Linear::glorot(dim, dim, rng),
            output: Linear::glorot(dim, dim, rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.query.weight.nrows()
    }

    pub fn parameter_count(&self) -> usize {
        4 * self.query.parameter_count()
    }

    pub(crate) fn slices<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a [f64])>) {
        self.query.slices(&format!("{prefix}.query"), out);
        self.key.slices(&format!("{prefix}.key"), out);
        self.value.slices(&format!("{prefix}.value"), out);
        self.output.slices(&format!("{prefix}.output"), out);
    }

    pub(crate) fn slices_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut [f64])>) {
        self.query.slices_mut(&format!("{prefix}.query"), out);
        self.key.slices_mut(&format!("{prefix}.key"), out);
        self.value.slices_mut(&format!("{prefix}.value"), out);
        self.output.slices_mut(&format!("{prefix}.output"), out);
    }

    pub(crate) fn shapes(&self, prefix: &str, out: &mut Vec<(String, (usize, usize))>) {
        self.query.shapes(&format!("{prefix}.query"), out);
        self.key.shapes(&format!("{prefix}.key"), out);
        self.value.shapes(&format!("{prefix}.value"), out);
        self.output.shapes(&format!("{prefix}.output"), out);
    }
}

/// Row-wise softmax. Entries with `mask[j] == true` get weight zero; a row
/// whose entries are all masked becomes all zeros.
pub fn softmax_rows(scores: ArrayView2<'_, f64>, mask: Option<&[bool]>) -> Array2<f64> {
    let mut out = scores.to_owned();
    for mut row in out.rows_mut() {
        let keep = |j: usize| mask.is_none_or(|m| !m[j]);
        let max = row.iter().enumerate().filter(|(j, _)| keep(*j)).map(|(_, &v)| v).fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            row.fill(0.0);
            continue;
        }
        let mut sum = 0.0;
        for (j, v) in row.iter_mut().enumerate() {
            *v = if keep(j) { (*v - max).exp() } else { 0.0 };
            sum += *v;
        }
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Everything one attention pass computes; doubles as the backward cache.
#[derive(Debug, Clone)]
pub struct MhcaOutput {
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    /// Per-head attention weights, each `n_q × n_k`.
    pub weights: Vec<Array2<f64>>,
    /// Concatenated head outputs before the output projection.
    pub attended: Array2<f64>,
    /// `attended · W_o + b_o`, `n_q × d`.
    pub output: Array2<f64>,
}

/// Multi-head attention of `query_seq` over `key_value_seq`.
///
/// Per head: `softmax(Q K^T / sqrt(d_k)) V`; heads are concatenated and
/// passed through the output projection.
pub fn mhca(
    query_seq: ArrayView2<'_, f64>,
    key_value_seq: ArrayView2<'_, f64>,
    block: &AttentionBlock,
    heads: usize,
    key_mask: Option<&[bool]>,
) -> Result<MhcaOutput, FusionError> {
    let d = block.dim();
    if query_seq.nrows() == 0 || key_value_seq.nrows() == 0 {
        return Err(FusionError::Contract("empty query or key sequence".into()));
    }
    if query_seq.ncols() != d || key_value_seq.ncols() != d {
        return Err(FusionError::Contract(format!(
            "sequence widths {} / {} do not match block width {d}",
            query_seq.ncols(),
            key_value_seq.ncols()
        )));
    }
    if heads == 0 || !d.is_multiple_of(heads) {
        return Err(FusionError::Contract(format!("{heads} heads do not divide width {d}")));
    }
    if let Some(mask) = key_mask {
        if mask.len() != key_value_seq.nrows() {
            return Err(FusionError::Contract("key mask length differs from key sequence".into()));
        }
    }
    let dk = d / heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let q = block.query.forward(query_seq);
    let k = block.key.forward(key_value_seq);
    let v = block.value.forward(key_value_seq);
    let mut attended = Array2::zeros((query_seq.nrows(), d));
    let mut weights = Vec::with_capacity(heads);
    for h in 0..heads {
        let cols = s![.., h * dk..(h + 1) * dk];
        let scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
        let w = softmax_rows(scores.view(), key_mask);
        attended.slice_mut(cols).assign(&w.dot(&v.slice(cols)));
        weights.push(w);
    }
    let output = block.output.forward(attended.view());
    Ok(MhcaOutput { q, k, v, weights, attended, output })
}

impl MhcaOutput {
    /// Backpropagate `dL/d output` through one pass, accumulating block
    /// gradients and returning `(dL/d query_seq, dL/d key_value_seq)`.
    pub fn backward(
        &self,
        query_seq: ArrayView2<'_, f64>,
        key_value_seq: ArrayView2<'_, f64>,
        block: &AttentionBlock,
        grad_output: ArrayView2<'_, f64>,
        grads: &mut AttentionBlock,
    ) -> (Array2<f64>, Array2<f64>) {
        let heads = self.weights.len();
        let d = block.dim();
        let dk = d / heads;
        let scale = 1.0 / (dk as f64).sqrt();
        let g_attended = block.output.backward(self.attended.view(), grad_output, &mut grads.output);
        let mut g_q = Array2::zeros(self.q.raw_dim());
        let mut g_k = Array2::zeros(self.k.raw_dim());
        let mut g_v = Array2::zeros(self.v.raw_dim());
        for (h, w) in self.weights.iter().enumerate() {
            let cols = s![.., h * dk..(h + 1) * dk];
            let g_head = g_attended.slice(cols);
            let g_w = g_head.dot(&self.v.slice(cols).t());
            g_v.slice_mut(cols).assign(&w.t().dot(&g_head));
            // softmax Jacobian: dS = W ∘ (dW - rowsum(dW ∘ W))
            let row_dot = (&g_w * w).sum_axis(Axis(1)).insert_axis(Axis(1));
            let g_scores = w * &(&g_w - &row_dot) * scale;
            g_q.slice_mut(cols).assign(&g_scores.dot(&self.k.slice(cols)));
            g_k.slice_mut(cols).assign(&g_scores.t().dot(&self.q.slice(cols)));
        }
        let g_query = block.query.backward(query_seq, g_q.view(), &mut grads.query);
        let g_kv = block.key.backward(key_value_seq, g_k.view(), &mut grads.key)
            + block.value.backward(key_value_seq, g_v.view(), &mut grads.value);
        (g_query, g_kv)
    }
}
