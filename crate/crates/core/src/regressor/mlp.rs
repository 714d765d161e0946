//! Fully connected network with tanh hidden layers and a linear output,
//! differentiated by hand.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights are row-major `[out][in]` per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Activations kept from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input plus the output of every layer (post-activation).
    pub activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl MlpParams {
    pub fn zeros(layer_sizes: &[usize]) -> Self {
        let weights = layer_sizes.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect();
        let biases = layer_sizes.windows(2).map(|w| vec![0.0; w[1]]).collect();
        Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Self {
        let mut p = Self::zeros(layer_sizes);
        for (l, w) in p.weights.iter_mut().enumerate() {
            let (fan_in, fan_out) = (layer_sizes[l], layer_sizes[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in w.iter_mut() {
                *v = rng.random_range(-limit..limit);
            }
        }
        p
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_len(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.layer_sizes.last().unwrap_or(&0)
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.layer_sizes.len();
        if n < 2 || self.weights.len() != n - 1 || self.biases.len() != n - 1 {
            return Err(Error::ModelParse(format!(
                "{} layer sizes but {} weight and {} bias arrays",
                n,
                self.weights.len(),
                self.biases.len()
            )));
        }
        for l in 0..n - 1 {
            let (i, o) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            if self.weights[l].len() != i * o || self.biases[l].len() != o {
                return Err(Error::ModelParse(format!("layer {l}: expected {o}x{i} weights")));
            }
        }
        let finite = self
            .weights
            .iter()
            .chain(&self.biases)
            .all(|v| v.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::ModelParse("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache> {
        if x.len() != self.input_len() {
            return Err(Error::ShapeMismatch {
                expected: self.input_len(),
                actual: x.len(),
            });
        }
        let last = self.num_layers() - 1;
        let mut activations = Vec::with_capacity(self.num_layers() + 1);
        activations.push(x.to_vec());
        for l in 0..self.num_layers() {
            let input = &activations[l];
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let w = &self.weights[l];
            let mut out = self.biases[l].clone();
            for (o, y) in out.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                *y += row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                if l != last {
                    *y = y.tanh();
                }
            }
            debug_assert_eq!(out.len(), n_out);
            activations.push(out);
        }
        Ok(ForwardCache { activations })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(x)?.activations.pop().unwrap_or_default())
    }

    /// Parameter gradients given d loss / d output.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<MlpParams> {
        let cache = self.forward_cached(x)?;
        let mut grad = Self::zeros(&self.layer_sizes);
        self.backward_into(&cache, upstream, &mut grad)?;
        Ok(grad)
    }

    /// Accumulates parameter gradients into `grad`.
    pub fn backward_into(&self, cache: &ForwardCache, upstream: &[f64], grad: &mut MlpParams) -> Result<()> {
        if upstream.len() != self.output_len() {
            return Err(Error::ShapeMismatch {
                expected: self.output_len(),
                actual: upstream.len(),
            });
        }
        let last = self.num_layers() - 1;
        // d loss / d pre-activation of the current layer.
        let mut delta = upstream.to_vec();
        for l in (0..self.num_layers()).rev() {
            if l != last {
                let out = &cache.activations[l + 1];
                for (d, y) in delta.iter_mut().zip(out) {
                    *d *= 1.0 - y * y;
                }
            }
            let input = &cache.activations[l];
            let n_in = self.layer_sizes[l];
            let gw = &mut grad.weights[l];
            for (o, d) in delta.iter().enumerate() {
                grad.biases[l][o] += d;
                let row = &mut gw[o * n_in..(o + 1) * n_in];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            if l > 0 {
                let w = &self.weights[l];
                let mut next = vec![0.0; n_in];
                for (o, d) in delta.iter().enumerate() {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    for (n, wv) in next.iter_mut().zip(row) {
                        *n += d * wv;
                    }
                }
                delta = next;
            }
        }
        Ok(())
    }

    /// Flat view of all parameters, layer by layer, weights before biases.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in 0..self.num_layers() {
            out.extend_from_slice(&self.weights[l]);
            out.extend_from_slice(&self.biases[l]);
        }
        out
    }

    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let mut i = 0;
        for l in 0..self.weights.len() {
            for v in self.weights[l].iter_mut().chain(self.biases[l].iter_mut()) {
                f(i, v);
                i += 1;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.for_each_param_mut(|_, v| *v *= factor);
    }

    /// A network on raw inputs `x` equal to this one applied to
    /// `(x - shift) * gain`, elementwise.
    pub fn fold_input_affine(&self, shift: &[f64], gain: &[f64]) -> Result<Self> {
        let n_in = self.input_len();
        for len in [shift.len(), gain.len()] {
            if len != n_in {
                return Err(Error::ShapeMismatch {
                    expected: n_in,
                    actual: len,
                });
            }
        }
        let mut out = self.clone();
        let n_out = self.layer_sizes[1];
        for o in 0..n_out {
            let row = &mut out.weights[0][o * n_in..(o + 1) * n_in];
            let mut offset = 0.0;
            for i in 0..n_in {
                row[i] *= gain[i];
                offset += row[i] * shift[i];
            }
            out.biases[0][o] -= offset;
        }
        Ok(out)
    }
}
