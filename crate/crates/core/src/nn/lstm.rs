//! Stacked LSTM with a linear read-out, trained by full backpropagation
//! through time.
//!
//! Gate blocks are stored in the order input, forget, cell candidate, output:
//! rows `[0, H)` of the weight matrices feed the input gate, `[H, 2H)` the
//! forget gate and so on.

use super::mat::{gemm, Mat, Operand};
use super::mlp::Dense;
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    /// `4H × in`
    pub w_x: Mat,
    /// `4H × H`
    pub w_h: Mat,
    /// `4H`
    pub b: Vec<f64>,
}

impl LstmLayer {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmLayer {
            w_x: Mat::zeros(4 * hidden, input),
            w_h: Mat::zeros(4 * hidden, hidden),
            b: vec![0.0; 4 * hidden],
        }
    }

    /// Uniform `±1/√(in + H)` weights; forget-gate bias starts at 1.
    pub fn init(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / ((input + hidden) as f64).sqrt();
        let mut l = LstmLayer::zeros(input, hidden);
        l.w_x
            .data
            .iter_mut()
            .chain(l.w_h.data.iter_mut())
            .chain(l.b.iter_mut())
            .for_each(|v| *v = rng.random_range(-bound..=bound));
        l.b[hidden..2 * hidden].iter_mut().for_each(|v| *v = 1.0);
        l
    }

    pub fn hidden(&self) -> usize {
        self.w_h.cols
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.cols
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub layers: Vec<LstmLayer>,
    pub head: Dense,
}

/// Per-layer hidden and cell vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmHidden {
    pub h: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl LstmHidden {
    pub fn is_finite(&self) -> bool {
        self.h.iter().chain(&self.c).flatten().all(|v| v.is_finite())
    }
}

/// Forward activations of one layer over a whole time-major batch.
struct LayerCache {
    /// Post-nonlinearity gates, `(T·B) × 4H`.
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

/// Everything the backward pass needs.
pub struct LstmCache {
    steps: usize,
    batch: usize,
    inputs: Vec<Vec<f64>>,
    layers: Vec<LayerCache>,
    output: Vec<f64>,
}

impl LstmCache {
    /// Outputs in time-major order: row `t·B + b`.
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

impl LstmParams {
    pub fn init(
        input: usize,
        hidden: usize,
        depth: usize,
        output: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if input == 0 || hidden == 0 || depth == 0 || output == 0 {
            return Err(Error::arg("LSTM dimensions must be positive"));
        }
        let layers = (0..depth)
            .map(|l| LstmLayer::init(if l == 0 { input } else { hidden }, hidden, rng))
            .collect();
        Ok(LstmParams {
            layers,
            head: Dense::init(hidden, output, rng),
        })
    }

    pub fn zeros_like(&self) -> Self {
        LstmParams {
            layers: self
                .layers
                .iter()
                .map(|l| LstmLayer::zeros(l.input_dim(), l.hidden()))
                .collect(),
            head: Dense::zeros(self.head.input_dim(), self.head.output_dim()),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.head.output_dim()
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.hidden()).collect()
    }

    pub fn zero_hidden(&self) -> LstmHidden {
        LstmHidden {
            h: self.layers.iter().map(|l| vec![0.0; l.hidden()]).collect(),
            c: self.layers.iter().map(|l| vec![0.0; l.hidden()]).collect(),
        }
    }

    /// Run the stack over a time-major batch `x` of shape `(steps·batch) × in`
    /// starting from zero state.
    pub fn forward_seq(&self, x: &[f64], steps: usize, batch: usize) -> Result<LstmCache> {
        if x.len() != steps * batch * self.input_dim() {
            return Err(Error::shape(format!(
                "LSTM expects {} inputs per row, got {} values for {} rows",
                self.input_dim(),
                x.len(),
                steps * batch
            )));
        }
        let mut inputs = vec![x.to_vec()];
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let cache = layer_forward(layer, inputs.last().unwrap(), steps, batch);
            inputs.push(cache.h.clone());
            layers.push(cache);
        }
        let rows = steps * batch;
        let mut output = vec![0.0; rows * self.output_dim()];
        self.head.forward_into(inputs.last().unwrap(), rows, &mut output);
        // The last input buffer duplicates the top layer's h; drop it.
        inputs.pop();
        Ok(LstmCache {
            steps,
            batch,
            inputs,
            layers,
            output,
        })
    }

    /// Accumulate gradients of a loss with derivative `d_out` (time-major,
    /// same layout as [`LstmCache::output`]).
    pub fn backward_seq(&self, cache: &LstmCache, d_out: &[f64], grads: &mut LstmParams) {
        let (steps, batch) = (cache.steps, cache.batch);
        let rows = steps * batch;
        let top = &cache.layers.last().unwrap().h;
        let mut dh = self
            .head
            .backward(top, d_out, rows, &mut grads.head, true)
            .unwrap();
        for l in (0..self.layers.len()).rev() {
            dh = layer_backward(
                &self.layers[l],
                &cache.layers[l],
                &cache.inputs[l],
                &dh,
                steps,
                batch,
                &mut grads.layers[l],
                l > 0,
            );
        }
    }
}

fn layer_forward(layer: &LstmLayer, x: &[f64], steps: usize, batch: usize) -> LayerCache {
    let hs = layer.hidden();
    let g4 = 4 * hs;
    let rows = steps * batch;
    let mut gates = vec![0.0; rows * g4];
    for row in gates.chunks_exact_mut(g4) {
        row.copy_from_slice(&layer.b);
    }
    gemm(
        1.0,
        Operand::new(x, rows, layer.input_dim()),
        Operand::mat(&layer.w_x).t(),
        1.0,
        &mut gates,
    );
    let mut c = vec![0.0; rows * hs];
    let mut tanh_c = vec![0.0; rows * hs];
    let mut h = vec![0.0; rows * hs];
    for t in 0..steps {
        let cur = t * batch;
        if t > 0 {
            let prev = (t - 1) * batch;
            gemm(
                1.0,
                Operand::new(&h[prev * hs..cur * hs], batch, hs),
                Operand::mat(&layer.w_h).t(),
                1.0,
                &mut gates[cur * g4..(cur + batch) * g4],
            );
        }
        for b in 0..batch {
            let r = cur + b;
            let g = &mut gates[r * g4..(r + 1) * g4];
            for j in 0..hs {
                g[j] = sigmoid(g[j]);
                g[hs + j] = sigmoid(g[hs + j]);
                g[2 * hs + j] = g[2 * hs + j].tanh();
                g[3 * hs + j] = sigmoid(g[3 * hs + j]);
            }
            for j in 0..hs {
                let c_prev = if t > 0 { c[(r - batch) * hs + j] } else { 0.0 };
                let cj = g[hs + j] * c_prev + g[j] * g[2 * hs + j];
                let tc = cj.tanh();
                c[r * hs + j] = cj;
                tanh_c[r * hs + j] = tc;
                h[r * hs + j] = g[3 * hs + j] * tc;
            }
        }
    }
    LayerCache {
        gates,
        c,
        tanh_c,
        h,
    }
}

#[allow(clippy::too_many_arguments)]
fn layer_backward(
    layer: &LstmLayer,
    cache: &LayerCache,
    x: &[f64],
    dh_above: &[f64],
    steps: usize,
    batch: usize,
    grad: &mut LstmLayer,
    want_dx: bool,
) -> Vec<f64> {
    let hs = layer.hidden();
    let g4 = 4 * hs;
    let rows = steps * batch;
    let mut dgates = vec![0.0; rows * g4];
    let mut dh_next = vec![0.0; batch * hs];
    let mut dc_next = vec![0.0; batch * hs];
    for t in (0..steps).rev() {
        let cur = t * batch;
        for b in 0..batch {
            let r = cur + b;
            let g = &cache.gates[r * g4..(r + 1) * g4];
            let dg = &mut dgates[r * g4..(r + 1) * g4];
            for j in 0..hs {
                let (i, f, cand, o) = (g[j], g[hs + j], g[2 * hs + j], g[3 * hs + j]);
                let tc = cache.tanh_c[r * hs + j];
                let c_prev = if t > 0 { cache.c[(r - batch) * hs + j] } else { 0.0 };
                let dh = dh_above[r * hs + j] + dh_next[b * hs + j];
                let dc = dh * o * (1.0 - tc * tc) + dc_next[b * hs + j];
                dg[j] = dc * cand * i * (1.0 - i);
                dg[hs + j] = dc * c_prev * f * (1.0 - f);
                dg[2 * hs + j] = dc * i * (1.0 - cand * cand);
                dg[3 * hs + j] = dh * tc * o * (1.0 - o);
                dc_next[b * hs + j] = dc * f;
            }
        }
        if t > 0 {
            gemm(
                1.0,
                Operand::new(&dgates[cur * g4..(cur + batch) * g4], batch, g4),
                Operand::mat(&layer.w_h),
                0.0,
                &mut dh_next,
            );
        }
    }
    if steps > 1 {
        let tail = (steps - 1) * batch;
        gemm(
            1.0,
            Operand::new(&dgates[batch * g4..], tail, g4).t(),
            Operand::new(&cache.h[..tail * hs], tail, hs),
            1.0,
            &mut grad.w_h.data,
        );
    }
    gemm(
        1.0,
        Operand::new(&dgates, rows, g4).t(),
        Operand::new(x, rows, layer.input_dim()),
        1.0,
        &mut grad.w_x.data,
    );
    for row in dgates.chunks_exact(g4) {
        for (gb, d) in grad.b.iter_mut().zip(row) {
            *gb += d;
        }
    }
    if !want_dx {
        return Vec::new();
    }
    let mut dx = vec![0.0; rows * layer.input_dim()];
    gemm(
        1.0,
        Operand::new(&dgates, rows, g4),
        Operand::mat(&layer.w_x),
        0.0,
        &mut dx,
    );
    dx
}

/// One recurrent step for a single input vector.
pub fn lstm_forward(
    params: &LstmParams,
    x: &[f64],
    hidden: &LstmHidden,
) -> Result<(Vec<f64>, LstmHidden)> {
    if x.len() != params.input_dim() {
        return Err(Error::shape(format!(
            "LSTM input width {} != {}",
            x.len(),
            params.input_dim()
        )));
    }
    if hidden.h.len() != params.layers.len()
        || hidden.c.len() != params.layers.len()
        || params
            .layers
            .iter()
            .zip(hidden.h.iter().zip(&hidden.c))
            .any(|(l, (h, c))| h.len() != l.hidden() || c.len() != l.hidden())
    {
        return Err(Error::shape("LSTM hidden state does not match parameters"));
    }
    let mut next = hidden.clone();
    let mut input = x.to_vec();
    for (l, layer) in params.layers.iter().enumerate() {
        let hs = layer.hidden();
        let mut g = layer.b.clone();
        gemm(
            1.0,
            Operand::new(&input, 1, layer.input_dim()),
            Operand::mat(&layer.w_x).t(),
            1.0,
            &mut g,
        );
        gemm(
            1.0,
            Operand::new(&hidden.h[l], 1, hs),
            Operand::mat(&layer.w_h).t(),
            1.0,
            &mut g,
        );
        for j in 0..hs {
            let i = sigmoid(g[j]);
            let f = sigmoid(g[hs + j]);
            let cand = g[2 * hs + j].tanh();
            let o = sigmoid(g[3 * hs + j]);
            let c = f * hidden.c[l][j] + i * cand;
            next.c[l][j] = c;
            next.h[l][j] = o * c.tanh();
        }
        input = next.h[l].clone();
    }
    let mut y = vec![0.0; params.output_dim()];
    params.head.forward_into(&input, 1, &mut y);
    Ok((y, next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    #[test]
    fn zero_weights_give_head_bias_and_zero_state() {
        let mut p = LstmParams::init(4, 6, 3, 2, &mut seed::rng(0)).unwrap();
        p = p.zeros_like();
        p.head.b = vec![0.25, -1.5];
        let h0 = p.zero_hidden();
        let (y, h1) = lstm_forward(&p, &[1.0, -2.0, 3.0, 0.5], &h0).unwrap();
        assert_eq!(y, vec![0.25, -1.5]);
        assert_eq!(h1, h0);
        let (y2, _) = lstm_forward(&p, &[1.0, -2.0, 3.0, 0.5], &h1).unwrap();
        assert_eq!(y, y2);
    }

    /// Hand-written single cell, evaluated with scalar loops only.
    fn reference_cell(
        layer: &LstmLayer,
        x: &[f64],
        h: &[f64],
        c: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let hs = h.len();
        let pre = |row: usize| -> f64 {
            let mut s = layer.b[row];
            for (k, xv) in x.iter().enumerate() {
                s += layer.w_x.at(row, k) * xv;
            }
            for (k, hv) in h.iter().enumerate() {
                s += layer.w_h.at(row, k) * hv;
            }
            s
        };
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut h_new = vec![0.0; hs];
        let mut c_new = vec![0.0; hs];
        for j in 0..hs {
            let i = sig(pre(j));
            let f = sig(pre(hs + j));
            let g = pre(2 * hs + j).tanh();
            let o = sig(pre(3 * hs + j));
            c_new[j] = f * c[j] + i * g;
            h_new[j] = o * c_new[j].tanh();
        }
        (h_new, c_new)
    }

    #[test]
    fn single_cell_matches_hand_evaluation() {
        let mut rng = seed::rng(11);
        let p = LstmParams::init(3, 2, 1, 1, &mut rng).unwrap();
        let mut hidden = p.zero_hidden();
        hidden.h[0] = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        hidden.c[0] = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let x = [0.3, -0.7, 1.1];
        let (y, next) = lstm_forward(&p, &x, &hidden).unwrap();
        let (h_ref, c_ref) = reference_cell(&p.layers[0], &x, &hidden.h[0], &hidden.c[0]);
        for j in 0..2 {
            assert!((next.h[0][j] - h_ref[j]).abs() < 1e-12);
            assert!((next.c[0][j] - c_ref[j]).abs() < 1e-12);
        }
        let y_ref = p.head.b[0] + p.head.w.at(0, 0) * h_ref[0] + p.head.w.at(0, 1) * h_ref[1];
        assert!((y[0] - y_ref).abs() < 1e-12);
    }

    #[test]
    fn sequence_forward_matches_stepwise() {
        let mut rng = seed::rng(5);
        let p = LstmParams::init(3, 4, 2, 2, &mut rng).unwrap();
        let (steps, batch) = (4, 2);
        let x: Vec<f64> = (0..steps * batch * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cache = p.forward_seq(&x, steps, batch).unwrap();
        for b in 0..batch {
            let mut h = p.zero_hidden();
            for t in 0..steps {
                let r = t * batch + b;
                let (y, nh) = lstm_forward(&p, &x[r * 3..(r + 1) * 3], &h).unwrap();
                h = nh;
                for k in 0..2 {
                    assert!((y[k] - cache.output()[r * 2 + k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let p = LstmParams::init(5, 8, 3, 2, &mut seed::rng(2)).unwrap();
        for l in &p.layers {
            assert!(l.b[8..16].iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn shape_errors() {
        let p = LstmParams::init(3, 2, 1, 1, &mut seed::rng(0)).unwrap();
        assert!(lstm_forward(&p, &[1.0], &p.zero_hidden()).is_err());
        let mut bad = p.zero_hidden();
        bad.h[0].push(0.0);
        assert!(lstm_forward(&p, &[1.0, 2.0, 3.0], &bad).is_err());
    }
}
