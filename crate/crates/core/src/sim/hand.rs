//! Scripted operator hand: a Cartesian impedance on the leader's pen tip.

use super::arm::{cartesian_to_joint, forward_kinematics, tip_velocity, ArmConfig};
use super::plan::{PenMode, Setpoint, StrokePlan};
use crate::error::{Error, Result};
use crate::state::{JointVec, JOINTS};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HandConfig {
    /// In-plane stiffness (N/m).
    pub kh: f64,
    /// In-plane damping (N·s/m).
    pub dh: f64,
    /// Vertical stiffness while hovering (N/m).
    pub kh_z: f64,
    /// Vertical damping (N·s/m).
    pub dh_z: f64,
}

impl Default for HandConfig {
    fn default() -> Self {
        HandConfig {
            kh: 200.0,
            dh: 5.0,
            kh_z: 200.0,
            dh_z: 30.0,
        }
    }
}

impl HandConfig {
    pub fn validate(&self) -> Result<()> {
        for v in [self.kh, self.dh, self.kh_z, self.dh_z] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::arg(format!("hand gains must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Force on the pen tip for a setpoint, tip position and tip velocity.
pub fn hand_force_cartesian(
    target: &Setpoint,
    lift_height: f64,
    pos: &[f64; 3],
    vel: &[f64; 3],
    cfg: &HandConfig,
) -> [f64; 3] {
    let fx = cfg.kh * (target.xy[0] - pos[0]) - cfg.dh * vel[0];
    let fy = cfg.kh * (target.xy[1] - pos[1]) - cfg.dh * vel[1];
    let fz = match target.mode {
        PenMode::Press(p) => -p - cfg.dh_z * vel[2],
        PenMode::Lift => cfg.kh_z * (lift_height - pos[2]) - cfg.dh_z * vel[2],
    };
    [fx, fy, fz]
}

/// Joint torques the hand applies to the leader at time `t`; zero once the
/// plan is over.
pub fn hand_force(
    t: f64,
    plan: &StrokePlan,
    q: &JointVec,
    dq: &JointVec,
    hand: &HandConfig,
    arm: &ArmConfig,
) -> JointVec {
    let Some(target) = plan.sample(t) else {
        return [0.0; JOINTS];
    };
    let pos = forward_kinematics(q, arm);
    let vel = tip_velocity(q, dq, arm);
    let f = hand_force_cartesian(&target, plan.lift_height, &pos, &vel, hand);
    cartesian_to_joint(q, &f, arm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::arm::inverse_kinematics;
    use crate::sim::plan::{BoardRect, PlanTiming, Stroke};

    fn plan() -> StrokePlan {
        let s = Stroke {
            points: vec![[0.2, 0.0], [0.22, 0.0]],
            pressure: 1.5,
        };
        StrokePlan::build("h", &[s], &PlanTiming::default(), &BoardRect::default()).unwrap()
    }

    #[test]
    fn on_target_while_lifted_is_force_free() {
        let p = plan();
        let arm = ArmConfig::default();
        let q = inverse_kinematics(0.2, 0.0, p.lift_height, &arm).unwrap();
        let tau = hand_force(0.1, &p, &q, &[0.0; 3], &HandConfig::default(), &arm);
        for v in tau {
            assert!(v.abs() < 1e-12, "{tau:?}");
        }
    }

    #[test]
    fn centimetre_error_pulls_with_two_newtons() {
        let target = Setpoint {
            xy: [0.21, 0.0],
            mode: PenMode::Lift,
        };
        let f = hand_force_cartesian(&target, 0.005, &[0.20, 0.0, 0.005], &[0.0; 3], &HandConfig::default());
        assert!((f[0] - 2.0).abs() < 1e-12);
        assert_eq!(f[1], 0.0);
        assert_eq!(f[2], 0.0);
    }

    #[test]
    fn pressing_pushes_toward_board() {
        let target = Setpoint {
            xy: [0.2, 0.0],
            mode: PenMode::Press(1.5),
        };
        let f = hand_force_cartesian(&target, 0.005, &[0.2, 0.0, 0.0], &[0.0; 3], &HandConfig::default());
        assert_eq!(f[2], -1.5);
    }

    #[test]
    fn after_plan_no_force() {
        let p = plan();
        let arm = ArmConfig::default();
        let q = inverse_kinematics(0.23, 0.01, 0.0, &arm).unwrap();
        let tau = hand_force(p.duration() + 0.1, &p, &q, &[0.0; 3], &HandConfig::default(), &arm);
        assert_eq!(tau, [0.0; 3]);
    }
}
