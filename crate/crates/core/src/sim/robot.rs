use super::arm::ArmConfig;
use super::observer::{dob_update, pseudo_diff, rfo_update, JointObserver, ObserverConfig};
use crate::error::{Error, Result};
use crate::state::{state_from_parts, JointVec, StateVector, JOINTS};

/// Plant state of one arm.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmState {
    /// Joint coordinates (encoder readings are exact).
    pub q: JointVec,
    /// True joint velocity.
    pub dq: JointVec,
}

/// What the controller sees after a sensing pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measured {
    pub q: JointVec,
    /// Pseudo-differentiated velocity.
    pub dq: JointVec,
    /// Reaction-force estimate (torque exerted by the joint on its
    /// surroundings).
    pub tau: JointVec,
}

impl Measured {
    pub fn to_state(&self) -> StateVector {
        state_from_parts(&self.q, &self.dq, &self.tau)
    }

    pub fn from_state(s: &[f64]) -> Self {
        let (q, dq, tau) = crate::state::state_parts(s);
        Measured { q, dq, tau }
    }
}

/// Integrate `J q̈ = τ_applied + τ_ext − b q̇` over one period with
/// semi-implicit Euler. `tau_ext` is the torque the surroundings exert on
/// the joints.
pub fn step_dynamics(
    state: &ArmState,
    tau_applied: &JointVec,
    tau_ext: &JointVec,
    cfg: &ArmConfig,
) -> Result<ArmState> {
    let mut next = state.clone();
    for j in 0..JOINTS {
        let acc = (tau_applied[j] + tau_ext[j] - cfg.friction[j] * state.dq[j]) / cfg.inertia[j];
        next.dq[j] = state.dq[j] + cfg.dt * acc;
        next.q[j] = state.q[j] + cfg.dt * next.dq[j];
    }
    if next.q.iter().chain(&next.dq).all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::Simulation { step: 0 })
    }
}

/// One acceleration-controlled arm: plant, observers and the last applied
/// command.
#[derive(Clone, Debug)]
pub struct Robot {
    pub cfg: ArmConfig,
    pub obs_cfg: ObserverConfig,
    pub state: ArmState,
    observers: [JointObserver; JOINTS],
    tau_cmd: JointVec,
    tau_dis: JointVec,
    measured: Measured,
}

impl Robot {
    pub fn new(q: JointVec, cfg: ArmConfig, obs_cfg: ObserverConfig) -> Self {
        let mut r = Robot {
            cfg,
            obs_cfg,
            state: ArmState {
                q,
                dq: [0.0; JOINTS],
            },
            observers: Default::default(),
            tau_cmd: [0.0; JOINTS],
            tau_dis: [0.0; JOINTS],
            measured: Measured {
                q,
                dq: [0.0; JOINTS],
                tau: [0.0; JOINTS],
            },
        };
        r.sense();
        r
    }

    /// Read encoders and run the pseudo-differentiator, DOB and RFO using
    /// the command applied over the last period.
    pub fn sense(&mut self) -> Measured {
        let dt = self.cfg.dt;
        let oc = &self.obs_cfg;
        for j in 0..JOINTS {
            let ob = &mut self.observers[j];
            let q = self.state.q[j];
            let v = pseudo_diff(q, ob, oc.g_v, dt);
            let dis = dob_update(self.tau_cmd[j], v, self.cfg.inertia[j], ob, oc.g_d, dt);
            let tau = rfo_update(dis, v, self.cfg.friction[j], ob, oc.g_r, dt);
            self.tau_dis[j] = dis;
            self.measured.q[j] = q;
            self.measured.dq[j] = v;
            self.measured.tau[j] = tau;
        }
        self.measured
    }

    pub fn measured(&self) -> Measured {
        self.measured
    }

    pub fn disturbance_estimate(&self) -> JointVec {
        self.tau_dis
    }

    /// Acceleration control: `τ_cmd = J_n·q̈_ref + τ̂_dis`.
    pub fn command(&mut self, acc_ref: &JointVec) -> JointVec {
        for j in 0..JOINTS {
            self.tau_cmd[j] = self.cfg.inertia[j] * acc_ref[j] + self.tau_dis[j];
        }
        self.tau_cmd
    }

    /// Advance the plant with the current command and external torque.
    pub fn advance(&mut self, tau_ext: &JointVec) -> Result<()> {
        self.state = step_dynamics(&self.state, &self.tau_cmd, tau_ext, &self.cfg)?;
        Ok(())
    }
}
