//! Hand-driven bilateral demonstrations and the episode file.

use super::arm::{cartesian_to_joint, forward_kinematics, inverse_kinematics, tip_velocity, ArmConfig};
use super::contact::{contact_and_ink, ContactConfig};
use super::control::{bilateral_step, Gains};
use super::hand::{hand_force, HandConfig};
use super::observer::ObserverConfig;
use super::plan::{BoardRect, StrokePlan};
use super::robot::Robot;
use crate::container::{columns_to_rows, rows_to_columns, sha256_hex, Container};
use crate::error::{Error, Result};
use crate::state::{StateVector, JOINTS, STATE_DIM};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const EPISODE_FORMAT_VERSION: u32 = 1;
const KIND: &str = "episode";

/// Everything the simulator needs besides the plan.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub arm: ArmConfig,
    pub observer: ObserverConfig,
    pub gains: Gains,
    pub hand: HandConfig,
    pub contact: ContactConfig,
    pub board: BoardRect,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.arm.validate()?;
        self.gains.validate()?;
        self.hand.validate()?;
        self.contact.validate()?;
        let o = &self.observer;
        if !(o.g_v > 0.0 && o.g_d > 0.0 && o.g_r > 0.0) {
            return Err(Error::arg("observer cutoffs must be positive"));
        }
        Ok(())
    }

    /// Hash of the canonical JSON form, recorded in every episode.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

/// A 2 ms record of one bilateral run. Rows are indexed by control step.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub dt: f64,
    pub plan_id: String,
    pub seed: u64,
    pub config_hash: String,
    pub follower: Vec<StateVector>,
    pub leader: Vec<StateVector>,
    /// Follower ink position, if the pen inked at that step.
    pub ink: Vec<Option<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub version: u32,
    pub dt: f64,
    pub joints: usize,
    pub plan_id: String,
    pub seed: u64,
    pub config_hash: String,
}

const STATE_NAMES: [&str; STATE_DIM] = ["q0", "q1", "q2", "dq0", "dq1", "dq2", "tau0", "tau1", "tau2"];

pub(crate) fn push_states<M>(c: &mut Container<M>, prefix: &str, rows: &[StateVector]) {
    for (name, col) in STATE_NAMES.iter().zip(rows_to_columns(rows)) {
        c.push(format!("{prefix}.{name}"), col);
    }
}

pub(crate) fn read_states<M>(c: &Container<M>, prefix: &str, path: &Path) -> Result<Vec<StateVector>> {
    let cols = STATE_NAMES
        .iter()
        .map(|n| c.require(&format!("{prefix}.{n}"), path))
        .collect::<Result<Vec<_>>>()?;
    columns_to_rows(&cols).ok_or_else(|| Error::Format {
        path: path.to_path_buf(),
        reason: format!("ragged {prefix} columns"),
    })
}

pub(crate) fn push_ink<M>(c: &mut Container<M>, prefix: &str, ink: &[Option<[f64; 2]>]) {
    c.push(format!("{prefix}.x"), ink.iter().map(|p| p.map_or(0.0, |p| p[0])).collect());
    c.push(format!("{prefix}.y"), ink.iter().map(|p| p.map_or(0.0, |p| p[1])).collect());
    c.push(format!("{prefix}.flag"), ink.iter().map(|p| f64::from(u8::from(p.is_some()))).collect());
}

pub(crate) fn read_ink<M>(c: &Container<M>, prefix: &str, path: &Path) -> Result<Vec<Option<[f64; 2]>>> {
    let x = c.require(&format!("{prefix}.x"), path)?;
    let y = c.require(&format!("{prefix}.y"), path)?;
    let f = c.require(&format!("{prefix}.flag"), path)?;
    if x.len() != f.len() || y.len() != f.len() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: "ragged ink columns".into(),
        });
    }
    Ok((0..f.len()).map(|i| (f[i] != 0.0).then_some([x[i], y[i]])).collect())
}

impl Episode {
    pub fn len(&self) -> usize {
        self.follower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.follower.is_empty()
    }

    pub fn ink_points(&self) -> Vec<Option<[f64; 2]>> {
        self.ink.clone()
    }

    pub fn to_container(&self) -> Container<EpisodeMeta> {
        let meta = EpisodeMeta {
            version: EPISODE_FORMAT_VERSION,
            dt: self.dt,
            joints: JOINTS,
            plan_id: self.plan_id.clone(),
            seed: self.seed,
            config_hash: self.config_hash.clone(),
        };
        let mut c = Container::new(KIND, meta);
        push_states(&mut c, "follower", &self.follower);
        push_states(&mut c, "leader", &self.leader);
        push_ink(&mut c, "ink", &self.ink);
        c
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.to_container().write(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let c: Container<EpisodeMeta> = Container::read(path, KIND)?;
        let m = &c.meta;
        if m.version != EPISODE_FORMAT_VERSION || m.joints != JOINTS {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("unsupported episode version {} with {} joints", m.version, m.joints),
            });
        }
        let follower = read_states(&c, "follower", path)?;
        let leader = read_states(&c, "leader", path)?;
        let ink = read_ink(&c, "ink", path)?;
        if leader.len() != follower.len() || ink.len() != follower.len() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: "leader, follower and ink lengths differ".into(),
            });
        }
        Ok(Episode {
            dt: m.dt,
            plan_id: m.plan_id.clone(),
            seed: m.seed,
            config_hash: m.config_hash.clone(),
            follower,
            leader,
            ink,
        })
    }
}

/// Number of control steps covering `duration`.
pub fn step_count(duration: f64, dt: f64) -> usize {
    (duration / dt).round() as usize
}

/// Drive the leader with the scripted hand and the follower against the
/// board under bilateral control for the whole plan.
pub fn run_demonstration(plan: &StrokePlan, seed: u64, cfg: &SimConfig) -> Result<Episode> {
    cfg.validate()?;
    let arm = &cfg.arm;
    let start = plan.start();
    let q0 = inverse_kinematics(start[0], start[1], plan.lift_height, arm)?;
    let mut leader = Robot::new(q0, arm.clone(), cfg.observer.clone());
    let mut follower = Robot::new(q0, arm.clone(), cfg.observer.clone());
    let n = step_count(plan.duration(), arm.dt);
    let mut ep = Episode {
        dt: arm.dt,
        plan_id: plan.id.clone(),
        seed,
        config_hash: cfg.hash(),
        follower: Vec::with_capacity(n),
        leader: Vec::with_capacity(n),
        ink: Vec::with_capacity(n),
    };
    for k in 0..n {
        let ml = if k == 0 { leader.measured() } else { leader.sense() };
        let mf = if k == 0 { follower.measured() } else { follower.sense() };
        let (acc_l, acc_f) = bilateral_step(&ml, &mf, &cfg.gains, &arm.inertia);
        leader.command(&acc_l);
        follower.command(&acc_f);

        let t = k as f64 * arm.dt;
        let tau_hand = hand_force(t, plan, &leader.state.q, &leader.state.dq, &cfg.hand, arm);
        let (tau_contact, ink) = board_contact(&follower, &cfg.contact);

        ep.follower.push(mf.to_state());
        ep.leader.push(ml.to_state());
        ep.ink.push(ink);

        leader.advance(&tau_hand).map_err(|_| Error::Simulation { step: k })?;
        follower.advance(&tau_contact).map_err(|_| Error::Simulation { step: k })?;
    }
    Ok(ep)
}

/// Contact torque on the follower's joints and the ink point, if any.
pub fn board_contact(follower: &Robot, cfg: &ContactConfig) -> ([f64; JOINTS], Option<[f64; 2]>) {
    let pose = forward_kinematics(&follower.state.q, &follower.cfg);
    let vel = tip_velocity(&follower.state.q, &follower.state.dq, &follower.cfg);
    let c = contact_and_ink(&pose, &vel, cfg);
    let force = [c.tangential[0], c.tangential[1], c.force];
    (cartesian_to_joint(&follower.state.q, &force, &follower.cfg), c.ink)
}
