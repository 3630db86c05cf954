//! Two-rate autonomous execution: the lower layer runs every network step,
//! the follower's bilateral law runs every control step against the held
//! leader prediction.

use super::lower::LowerPolicy;
use super::replay::{upper_outputs, UpperReplay};
use crate::container::Container;
use crate::error::{Error, Result};
use crate::nn::{denormalize, normalize, Moments};
use crate::seed;
use crate::sim::control::follower_step;
use crate::sim::demo::{board_contact, push_ink, push_states, read_ink, read_states, SimConfig};
use crate::sim::robot::{Measured, Robot};
use crate::state::{FeatureSet, StateVector, STATE_DIM};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const ROLLOUT_FORMAT_VERSION: u32 = 1;
const KIND: &str = "rollout";

/// Frame in which the feedback error is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackSpace {
    /// Network coordinates: target statistics for the error, input
    /// statistics for the ten-ahead reference.
    #[default]
    Normalized,
    /// Physical units, normalized afterwards with the input statistics.
    Physical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RolloutConfig {
    pub feedback: bool,
    pub feedback_space: FeedbackSpace,
    pub seed: u64,
    /// Bound of the uniform perturbation of the initial revolute joint
    /// angles (rad).
    pub init_perturbation: f64,
    pub sim: SimConfig,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        RolloutConfig {
            feedback: false,
            feedback_space: FeedbackSpace::Normalized,
            seed: 0,
            init_perturbation: 0.01,
            sim: SimConfig::default(),
        }
    }
}

/// `f10 + (f1 − f̂)` when enabled, `f10` otherwise.
pub fn feedback_combine(f10: &[f64], f1: &[f64], fhat_prev: &[f64], enabled: bool) -> Result<Vec<f64>> {
    if f1.len() != f10.len() || fhat_prev.len() != f10.len() {
        return Err(Error::shape(format!(
            "feedback vectors of widths {}, {}, {}",
            f10.len(),
            f1.len(),
            fhat_prev.len()
        )));
    }
    if !enabled {
        return Ok(f10.to_vec());
    }
    Ok(f10
        .iter()
        .zip(f1.iter().zip(fhat_prev))
        .map(|(a, (b, c))| a + (b - c))
        .collect())
}

/// One lower-layer evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerOutput {
    /// Full normalized input fed to the network.
    pub input: Vec<f64>,
    /// Normalized `[f̂_{k+1}, l̂_{k+1}]`.
    pub output: Vec<f64>,
    pub follower: StateVector,
    pub leader: StateVector,
}

fn slice(m: &Moments, from: usize, to: usize) -> Moments {
    Moments {
        mean: m.mean[from..to].to_vec(),
        std: m.std[from..to].to_vec(),
    }
}

/// Normalize `f_k`, append the (already normalized) upper input and run the
/// policy once.
pub fn lower_step(policy: &mut dyn LowerPolicy, f_k: &StateVector, upper: &[f64]) -> Result<LowerOutput> {
    let stats = policy.stats();
    let mut input = normalize(f_k, &slice(&stats.input, 0, STATE_DIM))?;
    input.extend_from_slice(upper);
    if input.len() != stats.input.dim() {
        return Err(Error::shape(format!(
            "policy expects {} inputs, got {}",
            stats.input.dim(),
            input.len()
        )));
    }
    let target = stats.target.clone();
    let output = policy.forward(&input)?;
    if output.len() != 2 * STATE_DIM {
        return Err(Error::shape(format!("policy produced {} outputs", output.len())));
    }
    if !output.iter().all(|v| v.is_finite()) {
        return Err(Error::Numeric("non-finite policy output".into()));
    }
    let phys = denormalize(&output, &target)?;
    let mut follower = [0.0; STATE_DIM];
    let mut leader = [0.0; STATE_DIM];
    follower.copy_from_slice(&phys[..STATE_DIM]);
    leader.copy_from_slice(&phys[STATE_DIM..]);
    Ok(LowerOutput {
        input,
        output,
        follower,
        leader,
    })
}

/// Everything recorded during one autonomous run.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutLog {
    pub dt: f64,
    pub factor: usize,
    pub replay_id: String,
    pub policy_id: String,
    pub feature_set: FeatureSet,
    pub feedback: bool,
    pub feedback_space: FeedbackSpace,
    pub seed: u64,
    /// Measured follower state at every control step, `factor·T + 1` rows.
    pub follower: Vec<StateVector>,
    /// Follower ink at every control step.
    pub ink: Vec<Option<[f64; 2]>>,
    /// Normalized network input per network step.
    pub nn_input: Vec<Vec<f64>>,
    /// Upper part of the input (normalized) per network step.
    pub upper: Vec<Vec<f64>>,
    /// Feedback error term per network step (zero at k = 0).
    pub error: Vec<Vec<f64>>,
    pub fhat: Vec<StateVector>,
    pub lhat: Vec<StateVector>,
    /// The replayed reference `r[0..=T]`.
    pub reference: Vec<StateVector>,
}

impl RolloutLog {
    pub fn nn_steps(&self) -> usize {
        self.nn_input.len()
    }

    /// Follower revolute angles sampled on the network grid `k = 0..=T`.
    pub fn angles(&self) -> Vec<[f64; 2]> {
        self.follower.iter().step_by(self.factor).map(|s| [s[0], s[1]]).collect()
    }

    pub fn reference_angles(&self) -> Vec<[f64; 2]> {
        self.reference.iter().map(|s| [s[0], s[1]]).collect()
    }
}

/// Run the follower autonomously along `replay` with `policy` as the lower
/// layer.
pub fn run_autonomous(
    policy: &mut dyn LowerPolicy,
    policy_id: &str,
    replay: &UpperReplay,
    cfg: &RolloutConfig,
) -> Result<RolloutLog> {
    cfg.sim.validate()?;
    let fs = replay.feature_set;
    if policy.feature_set() != fs {
        return Err(Error::arg(format!(
            "policy uses {} but the replay provides {}",
            policy.feature_set(),
            fs
        )));
    }
    let d = fs.dim();
    let stats = policy.stats().clone();
    if stats.input.dim() != STATE_DIM + d || stats.target.dim() != 2 * STATE_DIM {
        return Err(Error::shape("policy statistics do not match the feature set"));
    }
    let upper_stats = slice(&stats.input, STATE_DIM, STATE_DIM + d);
    let fhat_stats = slice(&stats.target, 0, d);
    policy.reset();

    let arm = &cfg.sim.arm;
    let mut rng = seed::rng(seed::derive(cfg.seed, "init-pose", 0));
    let mut q0 = [replay.states[0][0], replay.states[0][1], replay.states[0][2]];
    for q in q0.iter_mut().take(2) {
        *q += rng.random_range(-cfg.init_perturbation..=cfg.init_perturbation);
    }
    let mut follower = Robot::new(q0, arm.clone(), cfg.sim.observer.clone());

    let t_end = replay.last();
    let factor = replay.factor;
    let mut log = RolloutLog {
        dt: arm.dt,
        factor,
        replay_id: replay.id.clone(),
        policy_id: policy_id.to_string(),
        feature_set: fs,
        feedback: cfg.feedback,
        feedback_space: cfg.feedback_space,
        seed: cfg.seed,
        follower: Vec::with_capacity(factor * t_end + 1),
        ink: Vec::with_capacity(factor * t_end),
        nn_input: Vec::with_capacity(t_end),
        upper: Vec::with_capacity(t_end),
        error: Vec::with_capacity(t_end),
        fhat: Vec::with_capacity(t_end),
        lhat: Vec::with_capacity(t_end),
        reference: replay.states.clone(),
    };
    // f^upper_k from the previous network step and the prediction f̂_k.
    let mut prev: Option<(Vec<f64>, LowerOutput)> = None;
    let mut k = 0;
    while let Some((f1, f10)) = upper_outputs(replay, k) {
        let mf = if k == 0 { follower.measured() } else { follower.sense() };
        let f_k = mf.to_state();
        let enabled = cfg.feedback && prev.is_some();
        let (upper, error) = match (&prev, cfg.feedback_space) {
            (None, _) => (normalize(&f10, &upper_stats)?, vec![0.0; d]),
            (Some((f1_prev, out)), FeedbackSpace::Normalized) => {
                let f10n = normalize(&f10, &upper_stats)?;
                let f1n = normalize(f1_prev, &fhat_stats)?;
                let fhat = &out.output[..d];
                let e = f1n.iter().zip(fhat).map(|(a, b)| a - b).collect();
                (feedback_combine(&f10n, &f1n, fhat, enabled)?, e)
            }
            (Some((f1_prev, out)), FeedbackSpace::Physical) => {
                let fhat = fs.select(&out.follower);
                let e = f1_prev.iter().zip(fhat).map(|(a, b)| a - b).collect();
                let combined = feedback_combine(&f10, f1_prev, fhat, enabled)?;
                (normalize(&combined, &upper_stats)?, e)
            }
        };
        let out = lower_step(policy, &f_k, &upper).map_err(|e| Error::Rollout {
            step: k,
            reason: e.to_string(),
        })?;
        let command = Measured::from_state(&out.leader);
        for i in 0..factor {
            let m = if i == 0 { mf } else { follower.sense() };
            let acc = follower_step(&command, &m, &cfg.sim.gains, &arm.inertia);
            follower.command(&acc);
            let (tau_ext, ink) = board_contact(&follower, &cfg.sim.contact);
            log.follower.push(m.to_state());
            log.ink.push(ink);
            follower.advance(&tau_ext).map_err(|_| Error::Rollout {
                step: k,
                reason: format!("follower diverged at control step {}", k * factor + i),
            })?;
        }
        log.nn_input.push(out.input.clone());
        log.upper.push(upper);
        log.error.push(error);
        log.fhat.push(out.follower);
        log.lhat.push(out.leader);
        prev = Some((f1, out));
        k += 1;
    }
    log.follower.push(follower.sense().to_state());
    Ok(log)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutMeta {
    pub version: u32,
    pub dt: f64,
    pub factor: usize,
    pub replay_id: String,
    pub policy_id: String,
    pub feature_set: FeatureSet,
    pub feedback: bool,
    pub feedback_space: FeedbackSpace,
    pub seed: u64,
    pub nn_steps: usize,
}

fn push_rows<M>(c: &mut Container<M>, prefix: &str, rows: &[Vec<f64>], width: usize) {
    for j in 0..width {
        c.push(format!("{prefix}{j}"), rows.iter().map(|r| r[j]).collect());
    }
}

fn read_rows<M>(c: &Container<M>, prefix: &str, width: usize, n: usize, path: &Path) -> Result<Vec<Vec<f64>>> {
    let cols = (0..width)
        .map(|j| c.require(&format!("{prefix}{j}"), path))
        .collect::<Result<Vec<_>>>()?;
    if cols.iter().any(|c| c.len() != n) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("column {prefix} has the wrong length"),
        });
    }
    Ok((0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
}

impl RolloutLog {
    pub fn to_container(&self) -> Container<RolloutMeta> {
        let d = self.feature_set.dim();
        let mut c = Container::new(
            KIND,
            RolloutMeta {
                version: ROLLOUT_FORMAT_VERSION,
                dt: self.dt,
                factor: self.factor,
                replay_id: self.replay_id.clone(),
                policy_id: self.policy_id.clone(),
                feature_set: self.feature_set,
                feedback: self.feedback,
                feedback_space: self.feedback_space,
                seed: self.seed,
                nn_steps: self.nn_steps(),
            },
        );
        push_states(&mut c, "follower", &self.follower);
        push_ink(&mut c, "ink", &self.ink);
        push_rows(&mut c, "nn.input", &self.nn_input, STATE_DIM + d);
        push_rows(&mut c, "nn.upper", &self.upper, d);
        push_rows(&mut c, "nn.error", &self.error, d);
        push_states(&mut c, "nn.fhat", &self.fhat);
        push_states(&mut c, "nn.lhat", &self.lhat);
        push_states(&mut c, "reference", &self.reference);
        c
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.to_container().write(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let c: Container<RolloutMeta> = Container::read(path, KIND)?;
        let m = c.meta.clone();
        if m.version != ROLLOUT_FORMAT_VERSION {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("unsupported rollout version {}", m.version),
            });
        }
        let d = m.feature_set.dim();
        Ok(RolloutLog {
            dt: m.dt,
            factor: m.factor,
            replay_id: m.replay_id,
            policy_id: m.policy_id,
            feature_set: m.feature_set,
            feedback: m.feedback,
            feedback_space: m.feedback_space,
            seed: m.seed,
            follower: read_states(&c, "follower", path)?,
            ink: read_ink(&c, "ink", path)?,
            nn_input: read_rows(&c, "nn.input", STATE_DIM + d, m.nn_steps, path)?,
            upper: read_rows(&c, "nn.upper", d, m.nn_steps, path)?,
            error: read_rows(&c, "nn.error", d, m.nn_steps, path)?,
            fhat: read_states(&c, "nn.fhat", path)?,
            lhat: read_states(&c, "nn.lhat", path)?,
            reference: read_states(&c, "reference", path)?,
        })
    }
}
