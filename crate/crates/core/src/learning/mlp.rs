//! Fully connected network with LeakyReLU hidden layers and a linear output.
//!
//! Parameters live in one flat vector, layer by layer: the weight matrix
//! (`out × in`, row-major) followed by the bias. Batches are row-major
//! `batch × width` slices. Products go through `matrixmultiply`.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slope of the LeakyReLU for negative inputs.
pub const LEAKY_SLOPE: f64 = 0.01;

pub fn leaky_relu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Activations of every layer for one batch, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub batch: usize,
    /// `layers[0]` is the input; `layers[l]` the output of layer `l`
    /// (after the activation for hidden layers).
    pub layers: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.layers.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// `c = a · op(b) + beta · c` for row-major `a` (`m × k`). With
/// `b_transposed` the matrix `b` is stored `n × k`, otherwise `k × n`.
fn gemm(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], b_transposed: bool, beta: f64, c: &mut [f64]) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsb, csb) = if b_transposed { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the slices hold at least m·k, k·n and m·n elements and the
    // strides address them in bounds.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), rsb, csb,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

impl Mlp {
    /// Network with zero parameters.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidInput(format!("bad layer sizes {sizes:?}")));
        }
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; n],
        })
    }

    /// Uniform fan-in initialisation with zero biases; the output layer is
    /// scaled by `output_gain`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let last = sizes.len() - 2;
        let mut offset = 0;
        for (l, w) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / fan_in as f64).sqrt() * if l == last { output_gain } else { 1.0 };
            if bound > 0.0 {
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                for p in &mut net.params[offset..offset + fan_in * fan_out] {
                    *p = dist.sample(rng);
                }
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Offsets of the weight and bias blocks of layer `l`.
    fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let mut offset = 0;
        for w in self.sizes.windows(2).take(l) {
            offset += w[0] * w[1] + w[1];
        }
        (offset, offset + self.sizes[l] * self.sizes[l + 1])
    }

    pub fn forward(&self, input: &[f64], batch: usize) -> Result<ForwardCache> {
        if input.len() != batch * self.input_dim() {
            return Err(Error::Contract(format!(
                "network input has {} values, expected {} x {}",
                input.len(),
                batch,
                self.input_dim()
            )));
        }
        let n_layers = self.sizes.len() - 1;
        let mut layers = Vec::with_capacity(n_layers + 1);
        layers.push(input.to_vec());
        for l in 0..n_layers {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, b) = self.layer_offsets(l);
            let weights = &self.params[w..b];
            let bias = &self.params[b..b + fan_out];
            let mut out = Vec::with_capacity(batch * fan_out);
            for _ in 0..batch {
                out.extend_from_slice(bias);
            }
            gemm(batch, fan_in, fan_out, &layers[l], weights, true, 1.0, &mut out);
            if l + 1 < n_layers {
                out.iter_mut().for_each(|v| *v = leaky_relu(*v));
            }
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::TrainingDiverged(format!(
                    "non-finite activation in layer {l}"
                )));
            }
            layers.push(out);
        }
        Ok(ForwardCache { batch, layers })
    }

    /// Output for a single input.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input, 1)?.layers.pop().unwrap_or_default())
    }

    /// Accumulates `∂L/∂params` into `grad` given `∂L/∂output` for the
    /// batch in `cache`.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64], grad: &mut [f64]) {
        let batch = cache.batch;
        let n_layers = self.sizes.len() - 1;
        debug_assert_eq!(grad.len(), self.params.len());
        debug_assert_eq!(grad_output.len(), batch * self.output_dim());
        let mut delta = grad_output.to_vec();
        for l in (0..n_layers).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, b) = self.layer_offsets(l);
            if l + 1 < n_layers {
                // derivative of the activation, read off the stored output
                for (d, &y) in delta.iter_mut().zip(&cache.layers[l + 1]) {
                    if y < 0.0 {
                        *d *= LEAKY_SLOPE;
                    }
                }
            }
            let input = &cache.layers[l];
            // dW += deltaᵀ · input, as (out × batch)(batch × in)
            let mut delta_t = vec![0.0; fan_out * batch];
            for r in 0..batch {
                for o in 0..fan_out {
                    delta_t[o * batch + r] = delta[r * fan_out + o];
                }
            }
            gemm(fan_out, batch, fan_in, &delta_t, input, false, 1.0, &mut grad[w..b]);
            for o in 0..fan_out {
                grad[b + o] += delta_t[o * batch..(o + 1) * batch].iter().sum::<f64>();
            }
            if l > 0 {
                let mut next = vec![0.0; batch * fan_in];
                gemm(batch, fan_out, fan_in, &delta, &self.params[w..b], false, 0.0, &mut next);
                delta = next;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn leaky_slope() {
        assert_eq!(leaky_relu(-1.0), -0.01);
        assert_eq!(leaky_relu(2.0), 2.0);
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let net = Mlp::zeros(&[5, 8, 3]).unwrap();
        assert_eq!(net.predict(&[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap(), vec![0.0; 3]);
        assert_eq!(net.num_params(), 5 * 8 + 8 + 8 * 3 + 3);
    }

    #[test]
    fn forward_matches_naive_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::new(&[4, 6, 5, 2], 1.0, &mut rng).unwrap();
        let x: Vec<f64> = (0..8).map(|i| (i as f64 * 0.37).sin()).collect();
        let batched = net.forward(&x, 2).unwrap();
        for r in 0..2 {
            let mut h = x[r * 4..(r + 1) * 4].to_vec();
            let mut offset = 0;
            for l in 0..3 {
                let (fi, fo) = (net.sizes[l], net.sizes[l + 1]);
                let mut out = vec![0.0; fo];
                for o in 0..fo {
                    let mut acc = net.params[offset + fi * fo + o];
                    for i in 0..fi {
                        acc += net.params[offset + o * fi + i] * h[i];
                    }
                    out[o] = if l < 2 { leaky_relu(acc) } else { acc };
                }
                offset += fi * fo + fo;
                h = out;
            }
            for o in 0..2 {
                assert!((batched.output()[r * 2 + o] - h[o]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut net = Mlp::new(&[3, 7, 4, 2], 1.0, &mut rng).unwrap();
        let x = [0.3, -1.2, 0.8, 1.1, 0.1, -0.4, -0.7, 0.9, 0.2];
        let w = [0.5, -1.5];
        // loss: Σ_rows w · output
        let loss = |net: &Mlp| -> f64 {
            let out = net.forward(&x, 3).unwrap();
            out.output().chunks(2).map(|r| r[0] * w[0] + r[1] * w[1]).sum()
        };
        let cache = net.forward(&x, 3).unwrap();
        let mut grad = vec![0.0; net.num_params()];
        net.backward(&cache, &[w, w, w].concat(), &mut grad);
        let h = 1e-6;
        for k in 0..net.num_params() {
            let orig = net.params[k];
            net.params[k] = orig + h;
            let up = loss(&net);
            net.params[k] = orig - h;
            let down = loss(&net);
            net.params[k] = orig;
            let numeric = (up - down) / (2.0 * h);
            assert!((numeric - grad[k]).abs() < 1e-6 * (1.0 + numeric.abs()), "param {k}");
        }
    }
}
