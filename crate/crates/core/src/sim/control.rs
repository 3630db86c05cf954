//! Four-channel bilateral law.
//!
//! Each joint pair runs an antisymmetric position servo on the difference
//! mode and a force servo that drives the sum of the reaction-force
//! estimates to zero on the common mode. The force gain is scaled by the
//! nominal inertia, so `kf = 1` makes the coupled pair behave like one
//! body of twice the inertia under the two external forces.

use super::robot::Measured;
use crate::error::{Error, Result};
use crate::state::{JointVec, JOINTS};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Gains {
    pub kp: JointVec,
    pub kd: JointVec,
    pub kf: JointVec,
}

impl Default for Gains {
    fn default() -> Self {
        Gains {
            kp: [400.0; JOINTS],
            kd: [40.0; JOINTS],
            kf: [1.0; JOINTS],
        }
    }
}

impl Gains {
    pub fn validate(&self) -> Result<()> {
        for v in self.kp.iter().chain(&self.kd).chain(&self.kf) {
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(Error::arg(format!("gains must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Acceleration references `(leader, follower)` for one control period.
pub fn bilateral_step(
    leader: &Measured,
    follower: &Measured,
    gains: &Gains,
    inertia: &JointVec,
) -> (JointVec, JointVec) {
    let mut acc_l = [0.0; JOINTS];
    let mut acc_f = [0.0; JOINTS];
    for j in 0..JOINTS {
        let pos = gains.kp[j] * (leader.q[j] - follower.q[j]) + gains.kd[j] * (leader.dq[j] - follower.dq[j]);
        let force = -gains.kf[j] / inertia[j] * (leader.tau[j] + follower.tau[j]);
        acc_f[j] = 0.5 * (pos + force);
        acc_l[j] = 0.5 * (-pos + force);
    }
    (acc_l, acc_f)
}

/// Follower half of the law against a commanded leader state.
pub fn follower_step(command: &Measured, follower: &Measured, gains: &Gains, inertia: &JointVec) -> JointVec {
    bilateral_step(command, follower, gains, inertia).1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(q: f64, dq: f64, tau: f64) -> Measured {
        Measured {
            q: [q; 3],
            dq: [dq; 3],
            tau: [tau; 3],
        }
    }

    const INERTIA: JointVec = [0.01, 0.01, 0.5];

    #[test]
    fn synchronized_equilibrium_gives_zero_references() {
        let (l, f) = bilateral_step(&m(0.4, -0.2, 0.7), &m(0.4, -0.2, -0.7), &Gains::default(), &INERTIA);
        assert_eq!(l, [0.0; 3]);
        assert_eq!(f, [0.0; 3]);
    }

    #[test]
    fn force_sum_is_pushed_down_on_both_sides() {
        let g = Gains {
            kp: [0.0; 3],
            kd: [0.0; 3],
            ..Gains::default()
        };
        let (l, f) = bilateral_step(&m(0.0, 0.0, 0.5), &m(0.0, 0.0, 0.5), &g, &INERTIA);
        // A positive reaction estimate means the joint pushes its
        // surroundings in +q; backing off in −q reduces it.
        for j in 0..3 {
            assert!(l[j] < 0.0 && f[j] < 0.0);
            assert_eq!(l[j], f[j]);
        }
    }

    #[test]
    fn position_servo_is_antisymmetric() {
        let g = Gains {
            kf: [0.0; 3],
            ..Gains::default()
        };
        let (l, f) = bilateral_step(&m(0.1, 0.0, 0.0), &m(0.0, 0.0, 0.0), &g, &INERTIA);
        for j in 0..3 {
            assert!((f[j] - 20.0).abs() < 1e-12);
            assert_eq!(l[j], -f[j]);
        }
    }

    #[test]
    fn negative_gain_rejected() {
        let g = Gains {
            kd: [40.0, -1.0, 40.0],
            ..Gains::default()
        };
        assert!(g.validate().is_err());
    }
}
