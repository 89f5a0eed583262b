use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

/// Affine map `x W + b` applied row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `in × out`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { weight: Array2::zeros((fan_in, fan_out)), bias: Array1::zeros(fan_out) }
    }

    /// Uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Self {
            weight: Array2::from_shape_fn((fan_in, fan_out), |_| rng.gen_range(-limit..=limit)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }

    /// Accumulate parameter gradients for `y = x W + b` given `dL/dy` and
    /// return `dL/dx`.
    pub fn backward(&self, x: ArrayView2<'_, f64>, grad_out: ArrayView2<'_, f64>, grads: &mut Linear) -> Array2<f64> {
        grads.weight += &x.t().dot(&grad_out);
        grads.bias += &grad_out.sum_axis(Axis(0));
        grad_out.dot(&self.weight.t())
    }

    pub fn parameter_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub(crate) fn slices<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a [f64])>) {
        out.push((format!("{prefix}.weight"), self.weight.as_slice().expect("standard layout")));
        out.push((format!("{prefix}.bias"), self.bias.as_slice().expect("standard layout")));
    }

    pub(crate) fn slices_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut [f64])>) {
        out.push((format!("{prefix}.weight"), self.weight.as_slice_mut().expect("standard layout")));
        out.push((format!("{prefix}.bias"), self.bias.as_slice_mut().expect("standard layout")));
    }

    pub(crate) fn shapes(&self, prefix: &str, out: &mut Vec<(String, (usize, usize))>) {
        out.push((format!("{prefix}.weight"), self.weight.dim()));
        out.push((format!("{prefix}.bias"), (1, self.bias.len())));
    }
}
