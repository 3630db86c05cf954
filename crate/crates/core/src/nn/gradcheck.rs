//! Central finite-difference check of the analytic gradients.
//!
//! The numeric side only ever calls the forward loss, so it is independent of
//! the backward code it checks.

use super::loss::{sequence_loss, sequence_loss_and_grads, Sequence};
use super::params::{Parameters, PolicyParams};
use crate::error::Result;

#[derive(Clone, Copy, Debug)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub checked: usize,
}

/// Denominator floor of [`relative_error`]. With `h = 1e-5` the central
/// difference carries round-off of about `ε·|L|/h ≈ 1e-11`, so partials
/// smaller than this floor are compared in absolute terms.
pub const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compare every analytic partial derivative against `(L(p+h) − L(p−h)) / 2h`.
pub fn check_gradients(params: &PolicyParams, batch: &[&Sequence], h: f64) -> Result<GradCheck> {
    let (_, grads) = sequence_loss_and_grads(params, batch)?;
    let analytic: Vec<f64> = grads.tensors().iter().flat_map(|t| t.iter().copied()).collect();
    let mut probe = params.clone();
    let mut out = GradCheck {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        checked: 0,
    };
    let mut flat = 0usize;
    let n_tensors = probe.tensors().len();
    for ti in 0..n_tensors {
        let len = probe.tensors()[ti].len();
        for i in 0..len {
            let orig = probe.tensors()[ti][i];
            probe.tensors_mut()[ti][i] = orig + h;
            let up = sequence_loss(&probe, batch)?;
            probe.tensors_mut()[ti][i] = orig - h;
            let down = sequence_loss(&probe, batch)?;
            probe.tensors_mut()[ti][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[flat];
            out.max_rel_error = out.max_rel_error.max(relative_error(a, numeric));
            out.max_abs_error = out.max_abs_error.max((a - numeric).abs());
            out.checked += 1;
            flat += 1;
        }
    }
    Ok(out)
}

/// Random small instance: a network of the given kind with width ≤ 8 and a
/// batch of sequences of length ≤ 5.
pub fn random_instance(
    kind: super::params::ModelKind,
    seed: u64,
) -> Result<(PolicyParams, Vec<Sequence>)> {
    use super::mat::Mat;
    use super::params::Arch;
    use rand::Rng;
    let mut rng = crate::seed::rng(seed);
    let input = rng.random_range(1..=4);
    let output = rng.random_range(1..=3);
    let hidden = rng.random_range(2..=8);
    let steps = rng.random_range(1..=5);
    let batch = rng.random_range(1..=3);
    let params = PolicyParams::init(Arch { kind, hidden }, input, output, rng.random())?;
    let seqs = (0..batch)
        .map(|_| {
            let x = (0..steps * input).map(|_| rng.random_range(-1.5..1.5)).collect();
            let t = (0..steps * output).map(|_| rng.random_range(-1.5..1.5)).collect();
            Sequence::new(
                Mat::from_vec(steps, input, x).unwrap(),
                Mat::from_vec(steps, output, t).unwrap(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((params, seqs))
}
