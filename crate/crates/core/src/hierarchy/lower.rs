//! Lower-layer policies as seen by the rollout loop.

use super::replay::UpperReplay;
use crate::datasets::TARGET_DIM;
use crate::error::{Error, Result};
use crate::nn::{lstm_forward, mlp_forward, LstmHidden, NormStats, PolicyParams, PolicyRecord};
use crate::state::{FeatureSet, STATE_DIM};

/// A network-rate predictor working in normalized coordinates.
pub trait LowerPolicy {
    fn feature_set(&self) -> FeatureSet;
    fn stats(&self) -> &NormStats;
    /// Forget any recurrent state.
    fn reset(&mut self);
    /// Normalized `[f_k, f_upper]` → normalized `[f̂_{k+1}, l̂_{k+1}]`.
    fn forward(&mut self, input: &[f64]) -> Result<Vec<f64>>;
}

/// A trained MLP or LSTM.
pub struct NetPolicy {
    record: PolicyRecord,
    hidden: Option<LstmHidden>,
}

impl NetPolicy {
    pub fn new(record: PolicyRecord) -> Self {
        let mut p = NetPolicy { record, hidden: None };
        p.reset();
        p
    }

    pub fn record(&self) -> &PolicyRecord {
        &self.record
    }
}

impl LowerPolicy for NetPolicy {
    fn feature_set(&self) -> FeatureSet {
        self.record.feature_set
    }

    fn stats(&self) -> &NormStats {
        &self.record.stats
    }

    fn reset(&mut self) {
        self.hidden = match &self.record.params {
            PolicyParams::Mlp(_) => None,
            PolicyParams::Lstm(l) => Some(l.zero_hidden()),
        };
    }

    fn forward(&mut self, input: &[f64]) -> Result<Vec<f64>> {
        match (&self.record.params, &mut self.hidden) {
            (PolicyParams::Mlp(m), _) => mlp_forward(m, input),
            (PolicyParams::Lstm(l), Some(h)) => {
                let (y, next) = lstm_forward(l, input, h)?;
                *h = next;
                Ok(y)
            }
            (PolicyParams::Lstm(_), None) => Err(Error::arg("LSTM policy used without reset")),
        }
    }
}

/// Test double that ignores its input and replays the recorded next
/// follower and leader states, with identity statistics.
pub struct OracleStub {
    follower: Vec<[f64; STATE_DIM]>,
    leader: Vec<[f64; STATE_DIM]>,
    feature_set: FeatureSet,
    stats: NormStats,
    step: usize,
}

impl OracleStub {
    pub fn new(replay: &UpperReplay) -> Self {
        OracleStub {
            follower: replay.states.clone(),
            leader: replay.leader.clone(),
            feature_set: replay.feature_set,
            stats: NormStats::identity(STATE_DIM + replay.feature_set.dim(), TARGET_DIM),
            step: 0,
        }
    }
}

impl LowerPolicy for OracleStub {
    fn feature_set(&self) -> FeatureSet {
        self.feature_set
    }

    fn stats(&self) -> &NormStats {
        &self.stats
    }

    fn reset(&mut self) {
        self.step = 0;
    }

    fn forward(&mut self, _input: &[f64]) -> Result<Vec<f64>> {
        let i = (self.step + 1).min(self.follower.len() - 1);
        self.step += 1;
        let mut y = self.follower[i].to_vec();
        y.extend_from_slice(&self.leader[i]);
        Ok(y)
    }
}
