//! Trained policy files.
//!
//! A policy is stored in a `policy` [`Container`]: the JSON header carries the
//! model kind, layer widths, feature set, seed, normalization statistics and
//! the per-epoch loss curve; every parameter tensor is one column.

use super::lstm::{LstmLayer, LstmParams};
use super::mlp::{Dense, MlpParams};
use super::norm::NormStats;
use super::params::{ModelKind, Parameters, PolicyParams};
use super::train::{EpochRecord, TrainLog};
use crate::container::Container;
use crate::error::{Error, Result};
use crate::state::FeatureSet;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const POLICY_FORMAT_VERSION: u32 = 1;
const KIND: &str = "policy";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub epochs: usize,
    pub final_train_loss: Option<f64>,
    pub final_val_loss: Option<f64>,
    pub grad_clipping: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyMeta {
    pub version: u32,
    pub kind: ModelKind,
    /// MLP: `[in, h1, .., out]`. LSTM: `[in, H × depth, out]`.
    pub widths: Vec<usize>,
    pub feature_set: FeatureSet,
    pub seed: u64,
    pub stats: NormStats,
    pub summary: TrainingSummary,
    pub loss_curve: Vec<EpochRecord>,
}

/// Trained lower-layer network with everything needed to run it.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyRecord {
    pub params: PolicyParams,
    pub stats: NormStats,
    pub feature_set: FeatureSet,
    pub seed: u64,
    pub loss_curve: Vec<EpochRecord>,
    pub summary: TrainingSummary,
}

impl PolicyRecord {
    pub fn new(
        params: PolicyParams,
        stats: NormStats,
        feature_set: FeatureSet,
        seed: u64,
        log: Option<&TrainLog>,
    ) -> Self {
        let summary = TrainingSummary {
            epochs: log.map_or(0, |l| l.epochs.len()),
            final_train_loss: log.and_then(|l| l.final_train_loss()),
            final_val_loss: log.and_then(|l| l.final_val_loss()),
            grad_clipping: false,
        };
        PolicyRecord {
            params,
            stats,
            feature_set,
            seed,
            loss_curve: log.map(|l| l.epochs.clone()).unwrap_or_default(),
            summary,
        }
    }

    fn widths(&self) -> Vec<usize> {
        match &self.params {
            PolicyParams::Mlp(m) => {
                let mut w = vec![m.input_dim()];
                w.extend(m.layers.iter().map(|l| l.output_dim()));
                w
            }
            PolicyParams::Lstm(l) => {
                let mut w = vec![l.input_dim()];
                w.extend(l.hidden_sizes());
                w.push(l.output_dim());
                w
            }
        }
    }

    pub fn to_container(&self) -> Container<PolicyMeta> {
        let meta = PolicyMeta {
            version: POLICY_FORMAT_VERSION,
            kind: self.params.kind(),
            widths: self.widths(),
            feature_set: self.feature_set,
            seed: self.seed,
            stats: self.stats.clone(),
            summary: self.summary.clone(),
            loss_curve: self.loss_curve.clone(),
        };
        let mut c = Container::new(KIND, meta);
        for (i, t) in self.params.tensors().iter().enumerate() {
            c.push(format!("p{i}"), t.to_vec());
        }
        c
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.to_container().write(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let c: Container<PolicyMeta> = Container::read(path, KIND)?;
        Self::from_container(c, path)
    }

    pub fn from_container(c: Container<PolicyMeta>, path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            path: path.to_path_buf(),
            reason,
        };
        let m = c.meta;
        if m.version != POLICY_FORMAT_VERSION {
            return Err(bad(format!("unsupported policy version {}", m.version)));
        }
        if m.widths.len() < 2 {
            return Err(bad("policy needs at least input and output widths".into()));
        }
        let mut params = match m.kind {
            ModelKind::Mlp => PolicyParams::Mlp(MlpParams {
                layers: m.widths.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            }),
            ModelKind::Lstm => {
                let hidden = &m.widths[1..m.widths.len() - 1];
                if hidden.is_empty() {
                    return Err(bad("LSTM policy without recurrent layers".into()));
                }
                let mut input = m.widths[0];
                let mut layers = Vec::new();
                for &h in hidden {
                    layers.push(LstmLayer::zeros(input, h));
                    input = h;
                }
                PolicyParams::Lstm(LstmParams {
                    layers,
                    head: Dense::zeros(input, *m.widths.last().unwrap()),
                })
            }
        };
        let mut tensors = params.tensors_mut();
        if tensors.len() != c.columns.len() {
            return Err(bad(format!(
                "expected {} tensors, found {}",
                tensors.len(),
                c.columns.len()
            )));
        }
        for (i, (t, (_, col))) in tensors.iter_mut().zip(&c.columns).enumerate() {
            if t.len() != col.len() {
                return Err(bad(format!("tensor {i} has {} values, expected {}", col.len(), t.len())));
            }
            t.copy_from_slice(col);
        }
        drop(tensors);
        if m.stats.input.dim() != params.input_dim() || m.stats.target.dim() != params.output_dim() {
            return Err(bad("normalization statistics do not match network widths".into()));
        }
        Ok(PolicyRecord {
            params,
            stats: m.stats,
            feature_set: m.feature_set,
            seed: m.seed,
            loss_curve: m.loss_curve,
            summary: m.summary,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::Arch;

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for kind in [ModelKind::Mlp, ModelKind::Lstm] {
            let params = PolicyParams::init(Arch { kind, hidden: 7 }, 12, 18, 3).unwrap();
            let rec = PolicyRecord::new(params, NormStats::identity(12, 18), FeatureSet::Pos, 3, None);
            let p = dir.path().join(format!("{kind}.pol"));
            rec.write(&p).unwrap();
            assert_eq!(PolicyRecord::read(&p).unwrap(), rec);
        }
    }

    #[test]
    fn mismatched_stats_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let params = PolicyParams::init(Arch { kind: ModelKind::Mlp, hidden: 3 }, 4, 2, 0).unwrap();
        let rec = PolicyRecord::new(params, NormStats::identity(5, 2), FeatureSet::Pos, 0, None);
        let p = dir.path().join("bad.pol");
        rec.write(&p).unwrap();
        assert!(PolicyRecord::read(&p).is_err());
    }
}
