//! Dense feed-forward networks over flat parameter slices, with manual
//! backpropagation.
//!
//! A layer with `n_in` inputs and `n_out` outputs owns `n_out * n_in` weights
//! (row-major, `W[out][in]`) followed by `n_out` biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(invalid(format!("unknown activation {other:?} (expected tanh or relu)"))),
        }
    }
}

/// Layer widths `[n_0, n_1, ..., n_k]`; hidden layers use `activation`, the
/// output layer is affine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mlp {
    sizes: Vec<usize>,
    activation: Activation,
}

/// Layer outputs of one forward pass; `layers[0]` is the input.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpCache {
    layers: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.layers.last().expect("cache holds at least the input")
    }
}

impl Mlp {
    pub fn new(sizes: Vec<usize>, activation: Activation) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(invalid("an MLP needs at least an input and an output width"));
        }
        if sizes.contains(&0) {
            return Err(invalid(format!("layer widths must be positive, got {sizes:?}")));
        }
        Ok(Self { sizes, activation })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// Parameter count per layer, `n_out * n_in + n_out`.
    pub fn layer_parameter_counts(&self) -> Vec<usize> {
        self.sizes.windows(2).map(|w| w[1] * w[0] + w[1]).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.layer_parameter_counts().iter().sum()
    }

    /// Xavier-uniform weights, zero biases. The output layer's weights are
    /// multiplied by `output_gain`.
    pub fn init<R: Rng + ?Sized>(&self, params: &mut [f64], output_gain: f64, rng: &mut R) {
        assert_eq!(params.len(), self.num_parameters());
        let last = self.sizes.len() - 2;
        let mut off = 0;
        for (k, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let bound = (6.0 / (n_in + n_out) as f64).sqrt();
            let gain = if k == last { output_gain } else { 1.0 };
            for p in &mut params[off..off + n_in * n_out] {
                *p = gain * rng.random_range(-bound..=bound);
            }
            off += n_in * n_out;
            params[off..off + n_out].fill(0.0);
            off += n_out;
        }
    }

    pub fn forward(&self, params: &[f64], input: &[f64]) -> MlpCache {
        debug_assert_eq!(params.len(), self.num_parameters());
        assert_eq!(input.len(), self.input_dim(), "MLP input width");
        let last = self.sizes.len() - 2;
        let mut layers = Vec::with_capacity(self.sizes.len());
        layers.push(input.to_vec());
        let mut off = 0;
        for (k, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let x = layers.last().unwrap();
            let weights = &params[off..off + n_in * n_out];
            let bias = &params[off + n_in * n_out..off + n_in * n_out + n_out];
            let y: Vec<f64> = weights
                .chunks_exact(n_in)
                .zip(bias)
                .map(|(row, &b)| {
                    let z = b + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                    if k == last {
                        z
                    } else {
                        self.activation.apply(z)
                    }
                })
                .collect();
            layers.push(y);
            off += n_in * n_out + n_out;
        }
        MlpCache { layers }
    }

    /// Accumulates `∂L/∂params` into `grad` and returns `∂L/∂input`.
    pub fn backward(&self, params: &[f64], cache: &MlpCache, d_output: &[f64], grad: &mut [f64]) -> Vec<f64> {
        debug_assert_eq!(grad.len(), self.num_parameters());
        assert_eq!(d_output.len(), self.output_dim());
        let n_layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for w in self.sizes.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        let mut delta = d_output.to_vec();
        for k in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[k], self.sizes[k + 1]);
            if k != n_layers - 1 {
                for (d, &y) in delta.iter_mut().zip(&cache.layers[k + 1]) {
                    *d *= self.activation.derivative_from_output(y);
                }
            }
            let x = &cache.layers[k];
            let off = offsets[k];
            let weights = &params[off..off + n_in * n_out];
            {
                let (gw, gb) = grad[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (g, &xi) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(x) {
                        *g += d * xi;
                    }
                    gb[o] += d;
                }
            }
            let mut d_in = vec![0.0; n_in];
            for (row, &d) in weights.chunks_exact(n_in).zip(&delta) {
                if d == 0.0 {
                    continue;
                }
                for (acc, &w) in d_in.iter_mut().zip(row) {
                    *acc += d * w;
                }
            }
            delta = d_in;
        }
        delta
    }
}
