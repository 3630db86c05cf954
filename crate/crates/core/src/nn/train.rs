use super::adam::{adam_step, AdamState};
use super::loss::{sequence_loss, sequence_loss_and_grads, Sequence};
use super::params::{Arch, PolicyParams};
use crate::error::{Error, Result};
use crate::seed;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainHyper {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            lr: 1e-4,
            batch_size: 16,
            epochs: 1000,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        // Zero is accepted so a frozen run can be used as a no-op check.
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::arg(format!("learning rate must be ≥ 0, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::arg("batch size must be ≥ 1"));
        }
        if self.epochs == 0 {
            return Err(Error::arg("epochs must be ≥ 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub arch: Arch,
    pub hyper: TrainHyper,
    pub epochs: Vec<EpochRecord>,
    /// Always false: no gradient clipping is applied.
    pub grad_clipping: bool,
    pub dropout: f64,
    pub weight_decay: f64,
}

impl TrainLog {
    pub fn final_train_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_loss)
    }

    pub fn final_val_loss(&self) -> Option<f64> {
        self.epochs.last().and_then(|e| e.val_loss)
    }
}

/// Train from a fresh seeded initialization.
pub fn fit(
    train: &[Sequence],
    val: &[Sequence],
    arch: Arch,
    hyper: &TrainHyper,
) -> Result<(PolicyParams, TrainLog)> {
    let first = train.first().ok_or_else(|| Error::arg("empty training set"))?;
    let params = PolicyParams::init(
        arch,
        first.input.cols,
        first.target.cols,
        seed::derive(hyper.seed, "init", 0),
    )?;
    fit_from(params, train, val, hyper)
}

/// Train starting from `params`. Mini-batches are drawn from a seeded shuffle
/// of the training sequences each epoch; the final-epoch parameters are
/// returned.
pub fn fit_from(
    mut params: PolicyParams,
    train: &[Sequence],
    val: &[Sequence],
    hyper: &TrainHyper,
) -> Result<(PolicyParams, TrainLog)> {
    hyper.validate()?;
    if train.is_empty() {
        return Err(Error::arg("empty training set"));
    }
    let arch = Arch {
        kind: params.kind(),
        hidden: match &params {
            PolicyParams::Mlp(m) => m.layers[0].output_dim(),
            PolicyParams::Lstm(l) => l.layers[0].hidden(),
        },
    };
    let mut rng = seed::rng(seed::derive(hyper.seed, "shuffle", 0));
    let mut adam = AdamState::new(&params);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let val_refs: Vec<&Sequence> = val.iter().collect();
    let mut log = TrainLog {
        arch,
        hyper: hyper.clone(),
        epochs: Vec::with_capacity(hyper.epochs),
        grad_clipping: false,
        dropout: 0.0,
        weight_decay: 0.0,
    };
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(hyper.batch_size) {
            let batch: Vec<&Sequence> = chunk.iter().map(|&i| &train[i]).collect();
            let (loss, grads) = match sequence_loss_and_grads(&params, &batch) {
                Ok(v) => v,
                Err(Error::Numeric(_)) => {
                    return Err(Error::Training {
                        epoch,
                        loss: f64::NAN,
                    })
                }
                Err(e) => return Err(e),
            };
            total += loss * batch.len() as f64;
            adam_step(&mut params, &grads, &mut adam, hyper)?;
        }
        let train_loss = total / train.len() as f64;
        if !train_loss.is_finite() || !params.is_finite() {
            return Err(Error::Training {
                epoch,
                loss: train_loss,
            });
        }
        let val_loss = if val_refs.is_empty() {
            None
        } else {
            Some(sequence_loss(&params, &val_refs).map_err(|_| Error::Training {
                epoch,
                loss: f64::NAN,
            })?)
        };
        log::debug!("epoch {epoch}: train {train_loss:.6} val {val_loss:?}");
        log.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
    }
    Ok((params, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::mat::Mat;
    use crate::nn::params::ModelKind;
    use rand::Rng;

    fn identity_data(n: usize, dim: usize, seed: u64) -> Vec<Sequence> {
        let mut rng = crate::seed::rng(seed);
        (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                Sequence::new(
                    Mat::from_vec(1, dim, x.clone()).unwrap(),
                    Mat::from_vec(1, dim, x).unwrap(),
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_learning_rate_keeps_initialization() {
        let data = identity_data(6, 2, 1);
        let arch = Arch { kind: ModelKind::Mlp, hidden: 8 };
        let hyper = TrainHyper {
            lr: 0.0,
            epochs: 1,
            batch_size: 6,
            ..TrainHyper::default()
        };
        let init = PolicyParams::init(arch, 2, 2, 3).unwrap();
        let (trained, log) = fit_from(init.clone(), &data, &[], &hyper).unwrap();
        assert_eq!(trained, init);
        assert_eq!(log.epochs.len(), 1);
        assert!(!log.grad_clipping);
    }

    #[test]
    fn learns_identity_map() {
        let data = identity_data(10, 2, 2);
        let hyper = TrainHyper {
            lr: 1e-2,
            epochs: 500,
            batch_size: 10,
            seed: 5,
            ..TrainHyper::default()
        };
        let (_, log) = fit(&data, &[], Arch { kind: ModelKind::Mlp, hidden: 16 }, &hyper).unwrap();
        let last = log.final_train_loss().unwrap();
        assert!(last < 1e-3, "final loss {last}");
    }

    #[test]
    fn training_is_deterministic() {
        let data = identity_data(12, 3, 4);
        let val = identity_data(3, 3, 9);
        let hyper = TrainHyper {
            lr: 1e-3,
            epochs: 20,
            batch_size: 5,
            seed: 77,
            ..TrainHyper::default()
        };
        for kind in [ModelKind::Mlp, ModelKind::Lstm] {
            let arch = Arch { kind, hidden: 6 };
            let (pa, la) = fit(&data, &val, arch, &hyper).unwrap();
            let (pb, lb) = fit(&data, &val, arch, &hyper).unwrap();
            assert_eq!(pa, pb);
            assert_eq!(
                la.final_train_loss().unwrap().to_bits(),
                lb.final_train_loss().unwrap().to_bits()
            );
            assert_eq!(la.epochs.len(), 20);
            assert!(la.final_val_loss().is_some());
        }
    }

    #[test]
    fn invalid_hyper_is_rejected() {
        let data = identity_data(2, 1, 0);
        let arch = Arch { kind: ModelKind::Mlp, hidden: 2 };
        for bad in [
            TrainHyper { lr: -1.0, ..TrainHyper::default() },
            TrainHyper { batch_size: 0, ..TrainHyper::default() },
            TrainHyper { epochs: 0, ..TrainHyper::default() },
        ] {
            assert!(fit(&data, &[], arch, &bad).is_err());
        }
        assert!(fit(&[], &[], arch, &TrainHyper::default()).is_err());
    }
}
