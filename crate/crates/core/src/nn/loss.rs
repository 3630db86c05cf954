use super::mat::Mat;
use super::params::PolicyParams;
use crate::error::{Error, Result};

/// One training sequence: per-step inputs and targets, already normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    /// `T × in`
    pub input: Mat,
    /// `T × out`
    pub target: Mat,
}

impl Sequence {
    pub fn new(input: Mat, target: Mat) -> Result<Self> {
        if input.rows != target.rows {
            return Err(Error::shape(format!(
                "sequence has {} input steps but {} target steps",
                input.rows, target.rows
            )));
        }
        Ok(Sequence { input, target })
    }

    pub fn steps(&self) -> usize {
        self.input.rows
    }
}

/// Stack a batch time-major: row `t·B + b` holds step `t` of sequence `b`.
fn time_major(batch: &[&Sequence], pick: impl Fn(&Sequence) -> &Mat) -> Vec<f64> {
    let steps = batch[0].steps();
    let width = pick(batch[0]).cols;
    let mut out = Vec::with_capacity(steps * batch.len() * width);
    for t in 0..steps {
        for s in batch {
            out.extend_from_slice(pick(s).row(t));
        }
    }
    out
}

fn check_batch(params: &PolicyParams, batch: &[&Sequence]) -> Result<usize> {
    let first = batch.first().ok_or_else(|| Error::arg("empty batch"))?;
    let steps = first.steps();
    if steps == 0 {
        return Err(Error::arg("zero-length sequences"));
    }
    for s in batch {
        if s.steps() != steps {
            return Err(Error::shape("sequences in a batch must share a length (pad first)"));
        }
        if s.input.cols != params.input_dim() || s.target.cols != params.output_dim() {
            return Err(Error::shape(format!(
                "sequence widths {}→{} do not match network {}→{}",
                s.input.cols,
                s.target.cols,
                params.input_dim(),
                params.output_dim()
            )));
        }
    }
    Ok(steps)
}

fn forward(params: &PolicyParams, batch: &[&Sequence], steps: usize) -> Result<(Vec<f64>, Fwd)> {
    let x = time_major(batch, |s| &s.input);
    Ok(match params {
        PolicyParams::Mlp(p) => {
            let cache = p.forward_batch(&x, steps * batch.len())?;
            (cache.output().to_vec(), Fwd::Mlp(cache))
        }
        PolicyParams::Lstm(p) => {
            let cache = p.forward_seq(&x, steps, batch.len())?;
            (cache.output().to_vec(), Fwd::Lstm(cache))
        }
    })
}

enum Fwd {
    Mlp(super::mlp::MlpCache),
    Lstm(super::lstm::LstmCache),
}

fn mse(y: &[f64], t: &[f64]) -> f64 {
    y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
}

/// Mean squared error over every step, dimension and sequence, plus its exact
/// gradient. MLP steps are independent samples; the LSTM is unrolled over the
/// full sequence from a zero state.
pub fn sequence_loss_and_grads(
    params: &PolicyParams,
    batch: &[&Sequence],
) -> Result<(f64, PolicyParams)> {
    let steps = check_batch(params, batch)?;
    let (y, fwd) = forward(params, batch, steps)?;
    let t = time_major(batch, |s| &s.target);
    let loss = mse(&y, &t);
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("loss is {loss}")));
    }
    let scale = 2.0 / y.len() as f64;
    let d_out: Vec<f64> = y.iter().zip(&t).map(|(a, b)| scale * (a - b)).collect();
    let mut grads = params.zeros_like();
    match (params, &fwd, &mut grads) {
        (PolicyParams::Mlp(p), Fwd::Mlp(c), PolicyParams::Mlp(g)) => p.backward_batch(c, &d_out, g),
        (PolicyParams::Lstm(p), Fwd::Lstm(c), PolicyParams::Lstm(g)) => p.backward_seq(c, &d_out, g),
        _ => unreachable!("cache kind follows parameter kind"),
    }
    Ok((loss, grads))
}

/// Loss only, no gradients.
pub fn sequence_loss(params: &PolicyParams, batch: &[&Sequence]) -> Result<f64> {
    let steps = check_batch(params, batch)?;
    let (y, _) = forward(params, batch, steps)?;
    let loss = mse(&y, &time_major(batch, |s| &s.target));
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("loss is {loss}")));
    }
    Ok(loss)
}
