use super::params::Parameters;
use super::train::TrainHyper;
use crate::error::{Error, Result};

/// First/second moment accumulators, shaped like the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &impl Parameters) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step<P: Parameters>(
    params: &mut P,
    grads: &P,
    state: &mut AdamState,
    hyper: &TrainHyper,
) -> Result<()> {
    let gs = grads.tensors();
    let mut ps = params.tensors_mut();
    if ps.len() != gs.len()
        || ps.len() != state.m.len()
        || ps
            .iter()
            .zip(&gs)
            .zip(&state.m)
            .any(|((p, g), m)| p.len() != g.len() || p.len() != m.len())
    {
        return Err(Error::shape("Adam: parameter, gradient and moment shapes differ"));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (hyper.beta1, hyper.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (((p, g), m), v) in ps
        .iter_mut()
        .zip(&gs)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper(lr: f64) -> TrainHyper {
        TrainHyper {
            lr,
            ..TrainHyper::default()
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![1.0, -2.0, 3.5];
        let g = vec![0.0; 3];
        let mut s = AdamState::new(&p);
        for _ in 0..5 {
            adam_step(&mut p, &g, &mut s, &hyper(1e-3)).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 3.5]);
        assert!(s.m[0].iter().chain(&s.v[0]).all(|&v| v == 0.0));
        assert_eq!(s.step, 5);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = vec![0.0];
        let mut s = AdamState::new(&p);
        adam_step(&mut p, &vec![0.5], &mut s, &hyper(1e-4)).unwrap();
        let expect = -1e-4 * 0.5 / (0.5 + 1e-8);
        assert!((p[0] - expect).abs() < 1e-18);
        assert!((p[0] + 1e-4).abs() < 1e-11);
    }

    #[test]
    fn three_steps_match_hand_recurrence() {
        let grads = [0.5, -0.25, 2.0];
        let h = hyper(1e-2);
        let mut p = vec![1.0];
        let mut s = AdamState::new(&p);
        for g in grads {
            adam_step(&mut p, &vec![g], &mut s, &h).unwrap();
        }
        // Written out from the recurrences with β1=0.9, β2=0.999.
        let (mut x, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for (k, g) in grads.iter().enumerate() {
            let t = (k + 1) as i32;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            x -= 1e-2 * mh / (vh.sqrt() + 1e-8);
        }
        assert!((p[0] - x).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = vec![0.0, 1.0];
        let mut s = AdamState::new(&p);
        assert!(adam_step(&mut p, &vec![1.0], &mut s, &hyper(1e-3)).is_err());
    }
}
