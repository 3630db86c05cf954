//! The upper layer: a recorded follower trajectory replayed at the
//! network rate.

use crate::error::{Error, Result};
use crate::sim::demo::Episode;
use crate::state::{FeatureSet, StateVector};

#[derive(Clone, Debug, PartialEq)]
pub struct UpperReplay {
    pub id: String,
    pub feature_set: FeatureSet,
    /// Follower reference `r[0..=T]` at the network rate.
    pub states: Vec<StateVector>,
    /// Recorded leader at the same instants.
    pub leader: Vec<StateVector>,
    /// Ink of the recorded demonstration at the control rate.
    pub ink: Vec<Option<[f64; 2]>>,
    /// Control steps per network step.
    pub factor: usize,
    /// Network steps between consecutive upper updates.
    pub horizon: usize,
}

impl UpperReplay {
    /// Offset-0 decimation of a reference demonstration.
    pub fn from_episode(ep: &Episode, fs: FeatureSet, factor: usize, horizon: usize) -> Result<Self> {
        if factor == 0 || horizon == 0 {
            return Err(Error::arg("factor and horizon must be positive"));
        }
        let states: Vec<StateVector> = ep.follower.iter().step_by(factor).copied().collect();
        if states.len() < horizon + 1 {
            return Err(Error::arg(format!(
                "replay of {} network steps is shorter than the horizon",
                states.len()
            )));
        }
        Ok(UpperReplay {
            id: ep.plan_id.clone(),
            feature_set: fs,
            leader: ep.leader.iter().step_by(factor).copied().collect(),
            states,
            ink: ep.ink.clone(),
            factor,
            horizon,
        })
    }

    /// `T`, the index of the last reference sample.
    pub fn last(&self) -> usize {
        self.states.len() - 1
    }

    pub fn select(&self, i: usize) -> &[f64] {
        self.feature_set.select(&self.states[i])
    }

    /// Revolute joint angles of the reference at every network step.
    pub fn angles(&self) -> Vec<[f64; 2]> {
        self.states.iter().map(|s| [s[0], s[1]]).collect()
    }
}

/// `(f^upper_{k+1}, f^upper_{k+10})` for network step `k`; the ten-ahead
/// reference is refreshed every `horizon` steps and clamps to `r[T]`.
/// `None` once the replay is exhausted.
pub fn upper_outputs(replay: &UpperReplay, k: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let t = replay.last();
    if k >= t {
        return None;
    }
    let h = replay.horizon;
    let ahead = (h * (k / h + 1)).min(t);
    Some((replay.select(k + 1).to_vec(), replay.select(ahead).to_vec()))
}
