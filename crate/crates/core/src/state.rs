//! Shared joint/state vector types.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Joints of the desk arm: two revolute joints in the board plane and one
/// prismatic pen-pressure axis.
pub const JOINTS: usize = 3;

/// Length of a full state vector `[θ, θ̇, τ]`.
pub const STATE_DIM: usize = 3 * JOINTS;

pub type JointVec = [f64; JOINTS];

/// Angle, angular velocity and torque of every joint, laid out as
/// `[θ_0..θ_2, θ̇_0..θ̇_2, τ_0..τ_2]`.
pub type StateVector = [f64; STATE_DIM];

pub fn state_from_parts(q: &JointVec, dq: &JointVec, tau: &JointVec) -> StateVector {
    let mut s = [0.0; STATE_DIM];
    s[..JOINTS].copy_from_slice(q);
    s[JOINTS..2 * JOINTS].copy_from_slice(dq);
    s[2 * JOINTS..].copy_from_slice(tau);
    s
}

pub fn state_parts(s: &[f64]) -> (JointVec, JointVec, JointVec) {
    let mut q = [0.0; JOINTS];
    let mut dq = [0.0; JOINTS];
    let mut tau = [0.0; JOINTS];
    q.copy_from_slice(&s[..JOINTS]);
    dq.copy_from_slice(&s[JOINTS..2 * JOINTS]);
    tau.copy_from_slice(&s[2 * JOINTS..3 * JOINTS]);
    (q, dq, tau)
}

/// Which part of the follower state the upper layer hands to the lower layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FeatureSet {
    /// `[θ]`
    Pos,
    /// `[θ, θ̇]`
    PosVel,
    /// `[θ, θ̇, τ]`
    PosVelTrq,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::Pos, FeatureSet::PosVel, FeatureSet::PosVelTrq];

    pub fn dim(self) -> usize {
        match self {
            FeatureSet::Pos => JOINTS,
            FeatureSet::PosVel => 2 * JOINTS,
            FeatureSet::PosVelTrq => 3 * JOINTS,
        }
    }

    /// The selected features are a prefix of the state layout.
    pub fn select(self, state: &[f64]) -> &[f64] {
        &state[..self.dim()]
    }

    pub fn tag(self) -> &'static str {
        match self {
            FeatureSet::Pos => "POS",
            FeatureSet::PosVel => "POS_VEL",
            FeatureSet::PosVelTrq => "POS_VEL_TRQ",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "POS" => Ok(FeatureSet::Pos),
            "POS_VEL" => Ok(FeatureSet::PosVel),
            "POS_VEL_TRQ" => Ok(FeatureSet::PosVelTrq),
            other => Err(format!("unknown feature set `{other}`")),
        }
    }
}
