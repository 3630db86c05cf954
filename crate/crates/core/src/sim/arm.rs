use crate::error::{Error, Result};
use crate::state::{JointVec, JOINTS};
use serde::{Deserialize, Serialize};

/// Physical constants of the desk arm. Joints 0 and 1 rotate in the board
/// plane, joint 2 is the prismatic pen axis (metres, positive away from the
/// board).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmConfig {
    /// Link lengths in metres.
    pub links: [f64; 2],
    /// Nominal and true inertia per joint (kg·m², kg for the pen axis).
    pub inertia: JointVec,
    /// Viscous friction per joint (N·m·s/rad, N·s/m).
    pub friction: JointVec,
    /// Control period in seconds.
    pub dt: f64,
}

impl Default for ArmConfig {
    fn default() -> Self {
        ArmConfig {
            links: [0.15, 0.15],
            inertia: [0.01, 0.01, 0.5],
            friction: [0.02, 0.02, 1.0],
            dt: 0.002,
        }
    }
}

impl ArmConfig {
    pub fn validate(&self) -> Result<()> {
        let all = self
            .links
            .iter()
            .chain(&self.inertia)
            .chain(&self.friction)
            .chain(std::iter::once(&self.dt));
        for v in all {
            if !(*v > 0.0 && v.is_finite()) {
                return Err(Error::arg(format!("arm constants must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Pen tip `(x, y, z)` for joint coordinates `q`.
pub fn forward_kinematics(q: &JointVec, cfg: &ArmConfig) -> [f64; 3] {
    let [l1, l2] = cfg.links;
    let a = q[0];
    let b = q[0] + q[1];
    [l1 * a.cos() + l2 * b.cos(), l1 * a.sin() + l2 * b.sin(), q[2]]
}

/// `∂(x, y, z)/∂q`, row-major 3×3.
pub fn jacobian(q: &JointVec, cfg: &ArmConfig) -> [[f64; JOINTS]; 3] {
    let [l1, l2] = cfg.links;
    let a = q[0];
    let b = q[0] + q[1];
    [
        [-l1 * a.sin() - l2 * b.sin(), -l2 * b.sin(), 0.0],
        [l1 * a.cos() + l2 * b.cos(), l2 * b.cos(), 0.0],
        [0.0, 0.0, 1.0],
    ]
}

/// Joint torques `Jᵀ F` for a Cartesian force on the pen tip.
pub fn cartesian_to_joint(q: &JointVec, force: &[f64; 3], cfg: &ArmConfig) -> JointVec {
    let j = jacobian(q, cfg);
    std::array::from_fn(|c| (0..3).map(|r| j[r][c] * force[r]).sum())
}

/// Pen-tip velocity `J q̇`.
pub fn tip_velocity(q: &JointVec, dq: &JointVec, cfg: &ArmConfig) -> [f64; 3] {
    let j = jacobian(q, cfg);
    std::array::from_fn(|r| (0..JOINTS).map(|c| j[r][c] * dq[c]).sum())
}

/// Joint coordinates reaching `(x, y)` with the elbow bent clockwise
/// (`q1 ≤ 0`), pen axis at `z`.
pub fn inverse_kinematics(x: f64, y: f64, z: f64, cfg: &ArmConfig) -> Result<JointVec> {
    let [l1, l2] = cfg.links;
    let r2 = x * x + y * y;
    let c = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    if !(-1.0..=1.0).contains(&c) {
        return Err(Error::arg(format!("point ({x:.3}, {y:.3}) is out of reach")));
    }
    let q1 = -c.acos();
    let q0 = y.atan2(x) - (l2 * q1.sin()).atan2(l1 + l2 * q1.cos());
    Ok([q0, q1, z])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close3(a: [f64; 3], b: [f64; 3]) {
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn forward_kinematics_examples() {
        let cfg = ArmConfig::default();
        close3(forward_kinematics(&[0.0, 0.0, 0.0], &cfg), [0.30, 0.0, 0.0]);
        close3(forward_kinematics(&[FRAC_PI_2, 0.0, 0.0], &cfg), [0.0, 0.30, 0.0]);
        close3(forward_kinematics(&[FRAC_PI_2, -FRAC_PI_2, 0.01], &cfg), [0.15, 0.15, 0.01]);
    }

    #[test]
    fn inverse_kinematics_round_trip() {
        let cfg = ArmConfig::default();
        for &(x, y) in &[(0.15, -0.05), (0.25, 0.05), (0.2, 0.0), (0.18, 0.03)] {
            let q = inverse_kinematics(x, y, 0.004, &cfg).unwrap();
            assert!(q[1] < 0.0);
            close3(forward_kinematics(&q, &cfg), [x, y, 0.004]);
        }
        assert!(inverse_kinematics(0.5, 0.0, 0.0, &cfg).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let cfg = ArmConfig::default();
        let q = [0.7, -1.6, 0.002];
        let j = jacobian(&q, &cfg);
        let h = 1e-6;
        for c in 0..3 {
            let mut up = q;
            let mut dn = q;
            up[c] += h;
            dn[c] -= h;
            let (pu, pd) = (forward_kinematics(&up, &cfg), forward_kinematics(&dn, &cfg));
            for r in 0..3 {
                assert!(((pu[r] - pd[r]) / (2.0 * h) - j[r][c]).abs() < 1e-8);
            }
        }
    }
}
