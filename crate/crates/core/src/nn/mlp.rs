//! Fully connected tanh network.

use super::mat::{gemm, Mat, Operand};
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Affine layer `y = W x + b` with `W` stored `out × in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Mat,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Dense {
            w: Mat::zeros(output, input),
            b: vec![0.0; output],
        }
    }

    /// Uniform `±1/√fan_in` for weights and biases.
    pub fn init(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        let mut d = Dense::zeros(input, output);
        d.w.data
            .iter_mut()
            .chain(d.b.iter_mut())
            .for_each(|v| *v = rng.random_range(-bound..=bound));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows
    }

    /// `out (n × output) ← x (n × input) Wᵀ + b`.
    pub(crate) fn forward_into(&self, x: &[f64], n: usize, out: &mut [f64]) {
        let m = self.output_dim();
        for row in out.chunks_exact_mut(m) {
            row.copy_from_slice(&self.b);
        }
        gemm(
            1.0,
            Operand::new(x, n, self.input_dim()),
            Operand::mat(&self.w).t(),
            1.0,
            out,
        );
    }

    /// Accumulate parameter gradients for `dy (n × output)` and return
    /// `dx = dy W` when requested.
    pub(crate) fn backward(
        &self,
        x: &[f64],
        dy: &[f64],
        n: usize,
        grad: &mut Dense,
        want_dx: bool,
    ) -> Option<Vec<f64>> {
        let (inp, out) = (self.input_dim(), self.output_dim());
        gemm(
            1.0,
            Operand::new(dy, n, out).t(),
            Operand::new(x, n, inp),
            1.0,
            &mut grad.w.data,
        );
        for row in dy.chunks_exact(out) {
            for (g, d) in grad.b.iter_mut().zip(row) {
                *g += d;
            }
        }
        want_dx.then(|| {
            let mut dx = vec![0.0; n * inp];
            gemm(1.0, Operand::new(dy, n, out), Operand::mat(&self.w), 0.0, &mut dx);
            dx
        })
    }
}

/// Multilayer perceptron: tanh after every layer except the last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<Dense>,
}

/// Activations of every layer for one batch, kept for the backward pass.
pub struct MlpCache {
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    pub acts: Vec<Vec<f64>>,
    pub n: usize,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }
}

impl MlpParams {
    /// Build from explicit layer widths, e.g. `[in, 200, 200, 200, out]`.
    pub fn init(widths: &[usize], rng: &mut impl Rng) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::arg(format!("invalid MLP widths {widths:?}")));
        }
        Ok(MlpParams {
            layers: widths.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect(),
        })
    }

    pub fn zeros_like(&self) -> Self {
        MlpParams {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.input_dim(), l.output_dim()))
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().output_dim()
    }

    /// Number of tanh nonlinearities in the network.
    pub fn activation_count(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn forward_batch(&self, x: &[f64], n: usize) -> Result<MlpCache> {
        if x.len() != n * self.input_dim() {
            return Err(Error::shape(format!(
                "MLP expects {} inputs per row, got {} values for {n} rows",
                self.input_dim(),
                x.len()
            )));
        }
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = vec![0.0; n * layer.output_dim()];
            layer.forward_into(acts.last().unwrap(), n, &mut out);
            if l < last {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(out);
        }
        Ok(MlpCache { acts, n })
    }

    /// Accumulate gradients of a loss whose derivative w.r.t. the network
    /// output is `d_out`.
    pub fn backward_batch(&self, cache: &MlpCache, d_out: &[f64], grads: &mut MlpParams) {
        let n = cache.n;
        let mut delta = d_out.to_vec();
        for l in (0..self.layers.len()).rev() {
            let dx = self.layers[l].backward(&cache.acts[l], &delta, n, &mut grads.layers[l], l > 0);
            if let Some(mut dx) = dx {
                // acts[l] is the tanh output of layer l-1.
                for (d, a) in dx.iter_mut().zip(&cache.acts[l]) {
                    *d *= 1.0 - a * a;
                }
                delta = dx;
            }
        }
    }
}

/// Single-sample forward pass.
pub fn mlp_forward(params: &MlpParams, x: &[f64]) -> Result<Vec<f64>> {
    Ok(params.forward_batch(x, 1)?.acts.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn chain_of_ones() -> MlpParams {
        let layer = || Dense {
            w: Mat::from_vec(1, 1, vec![1.0]).unwrap(),
            b: vec![0.0],
        };
        MlpParams {
            layers: vec![layer(), layer(), layer(), layer()],
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut p = MlpParams::init(&[3, 5, 5, 5, 2], &mut seed::rng(1)).unwrap();
        p = p.zeros_like();
        assert_eq!(mlp_forward(&p, &[0.3, -2.0, 9.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn unit_chain_values() {
        let p = chain_of_ones();
        assert_eq!(mlp_forward(&p, &[0.0]).unwrap(), vec![0.0]);
        let y = mlp_forward(&p, &[1.0]).unwrap()[0];
        // Independent evaluation of tanh(tanh(tanh(1))).
        let oracle = 1.0f64.tanh().tanh().tanh();
        assert_eq!(y, oracle);
        assert!((y - 0.566_27).abs() < 1e-5);
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let p = MlpParams::init(&[3, 4, 2], &mut seed::rng(0)).unwrap();
        assert!(matches!(mlp_forward(&p, &[1.0, 2.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let p = MlpParams::init(&[16, 200, 3], &mut seed::rng(3)).unwrap();
        let b0 = 1.0 / 4.0;
        assert!(p.layers[0].w.data.iter().all(|v| v.abs() <= b0));
        let b1 = 1.0 / 200f64.sqrt();
        assert!(p.layers[1].b.iter().all(|v| v.abs() <= b1));
    }
}
