//! Board contact and ink deposition.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Compliant board in the plane `z = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactConfig {
    /// N/m.
    pub stiffness: f64,
    /// N·s/m.
    pub damping: f64,
    /// Normal force above which the pen leaves ink (N).
    pub ink_threshold: f64,
    /// Pen–board Coulomb coefficient.
    pub friction: f64,
    /// Sliding speed below which friction is viscous rather than Coulomb (m/s).
    pub slip_speed: f64,
}

impl Default for ContactConfig {
    fn default() -> Self {
        ContactConfig {
            stiffness: 2000.0,
            damping: 10.0,
            ink_threshold: 0.3,
            friction: 0.3,
            slip_speed: 0.005,
        }
    }
}

impl ContactConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.stiffness > 0.0 && self.ink_threshold > 0.0 && self.damping >= 0.0) {
            return Err(Error::arg("contact stiffness and ink threshold must be positive"));
        }
        if !(self.friction >= 0.0 && self.slip_speed > 0.0) {
            return Err(Error::arg("friction must be ≥ 0 and slip speed positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact {
    /// Upward normal force on the pen, never negative.
    pub force: f64,
    /// In-plane friction force on the pen, opposing the sliding velocity.
    pub tangential: [f64; 2],
    pub ink: Option<[f64; 2]>,
}

const NO_CONTACT: Contact = Contact {
    force: 0.0,
    tangential: [0.0, 0.0],
    ink: None,
};

/// Contact forces and ink for a pen tip at `pose` moving with velocity `vel`.
/// Friction is Coulomb, `μ·F_n`, smoothed to viscous below the slip speed.
pub fn contact_and_ink(pose: &[f64; 3], vel: &[f64; 3], cfg: &ContactConfig) -> Contact {
    let z = pose[2];
    if z >= 0.0 {
        return NO_CONTACT;
    }
    let force = (cfg.stiffness * -z - cfg.damping * vel[2]).max(0.0);
    let speed = vel[0].hypot(vel[1]);
    let scale = -cfg.friction * force / speed.max(cfg.slip_speed);
    let ink = (force > cfg.ink_threshold).then_some([pose[0], pose[1]]);
    Contact {
        force,
        tangential: [scale * vel[0], scale * vel[1]],
        ink,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_pen_has_no_force() {
        let c = contact_and_ink(&[0.2, 0.0, 0.001], &[0.1, 0.0, -0.5], &ContactConfig::default());
        assert_eq!(c, NO_CONTACT);
    }

    #[test]
    fn millimetre_press_inks() {
        let c = contact_and_ink(&[0.2, 0.01, -0.001], &[0.0; 3], &ContactConfig::default());
        assert!((c.force - 2.0).abs() < 1e-12);
        assert_eq!(c.ink, Some([0.2, 0.01]));
    }

    #[test]
    fn friction_opposes_sliding() {
        let cfg = ContactConfig::default();
        // 2 N normal, sliding fast: Coulomb 0.6 N against the motion.
        let c = contact_and_ink(&[0.2, 0.0, -0.001], &[0.0, 0.05, 0.0], &cfg);
        assert!(c.tangential[0].abs() < 1e-15);
        assert!((c.tangential[1] + 0.6).abs() < 1e-12);
        // half the slip speed: viscous regime, half the Coulomb force
        let c = contact_and_ink(&[0.2, 0.0, -0.001], &[-0.0025, 0.0, 0.0], &cfg);
        assert!((c.tangential[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn light_touch_does_not_ink() {
        let c = contact_and_ink(&[0.2, 0.01, -0.0001], &[0.0; 3], &ContactConfig::default());
        assert!((c.force - 0.2).abs() < 1e-12);
        assert_eq!(c.ink, None);
    }

    #[test]
    fn force_is_clamped_when_pen_withdraws_fast() {
        let c = contact_and_ink(&[0.2, 0.0, -0.0001], &[0.0, 0.0, 1.0], &ContactConfig::default());
        assert_eq!(c.force, 0.0);
        assert_eq!(c.ink, None);
    }
}
