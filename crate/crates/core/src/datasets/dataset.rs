//! Network sequences built from demonstrations.

use super::pipeline::{add_noise, downsample_shift, lowpass_rows, pad_sequences};
use crate::container::Container;
use crate::error::{Error, Result};
use crate::nn::{normalize, Mat, Moments, NormStats, Sequence};
use crate::seed;
use crate::sim::demo::{push_states, read_states, Episode};
use crate::state::{FeatureSet, StateVector, STATE_DIM};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const DATASET_FORMAT_VERSION: u32 = 1;
const KIND: &str = "dataset";
/// Target row: next follower state then next leader state.
pub const TARGET_DIM: usize = 2 * STATE_DIM;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Teacher low-pass cutoff (rad/s).
    pub cutoff: f64,
    /// Control steps per network step.
    pub factor: usize,
    /// Network steps between the current state and the upper reference.
    pub horizon: usize,
    pub noise_variance: f64,
    /// Give the network the held upper reference (as during autonomy)
    /// instead of the exact ten-ahead state.
    pub hold_upper_during_training: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            cutoff: 20.0,
            factor: 10,
            horizon: 10,
            noise_variance: 0.01,
            hold_upper_during_training: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

/// One decimated copy of an episode at the network rate.
#[derive(Clone, Debug, PartialEq)]
pub struct NnSequence {
    pub episode_id: String,
    pub offset: usize,
    /// Length before padding.
    pub len: usize,
    /// Measured follower states (network inputs).
    pub follower: Vec<StateVector>,
    /// Low-passed follower states (targets).
    pub follower_teacher: Vec<StateVector>,
    /// Low-passed leader states (targets).
    pub leader_teacher: Vec<StateVector>,
}

impl NnSequence {
    /// Number of usable steps: the last `horizon + 1` samples only serve as
    /// references and targets.
    pub fn steps(&self, horizon: usize) -> usize {
        self.follower.len().saturating_sub(horizon + 1)
    }

    /// Index of the upper reference used at step `k`.
    pub fn upper_index(&self, k: usize, cfg: &PipelineConfig) -> usize {
        let h = cfg.horizon;
        let i = if cfg.hold_upper_during_training {
            h * (k / h + 1)
        } else {
            k + h
        };
        i.min(self.follower.len() - 1)
    }

    /// `[f_k, select(f_upper)]`.
    pub fn input_row(&self, k: usize, fs: FeatureSet, cfg: &PipelineConfig) -> Vec<f64> {
        let mut row = self.follower[k].to_vec();
        row.extend_from_slice(fs.select(&self.follower[self.upper_index(k, cfg)]));
        row
    }

    /// `[f̃_{k+1}, l̃_{k+1}]`.
    pub fn target_row(&self, k: usize) -> [f64; TARGET_DIM] {
        let mut row = [0.0; TARGET_DIM];
        row[..STATE_DIM].copy_from_slice(&self.follower_teacher[k + 1]);
        row[STATE_DIM..].copy_from_slice(&self.leader_teacher[k + 1]);
        row
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub feature_set: FeatureSet,
    pub config: PipelineConfig,
    pub stats: NormStats,
    pub train: Vec<NnSequence>,
    pub val: Vec<NnSequence>,
}

/// Low-pass the teacher series at the control rate, then split each episode
/// into `factor` shifted network-rate sequences.
pub fn episode_sequences(ep: &Episode, cfg: &PipelineConfig) -> Result<Vec<NnSequence>> {
    let f_teacher = lowpass_rows(&ep.follower, cfg.cutoff, ep.dt)?;
    let l_teacher = lowpass_rows(&ep.leader, cfg.cutoff, ep.dt)?;
    let raw = downsample_shift(&ep.follower, cfg.factor)?;
    let ft = downsample_shift(&f_teacher, cfg.factor)?;
    let lt = downsample_shift(&l_teacher, cfg.factor)?;
    Ok(raw
        .into_iter()
        .zip(ft)
        .zip(lt)
        .enumerate()
        .map(|(offset, ((follower, follower_teacher), leader_teacher))| NnSequence {
            episode_id: ep.plan_id.clone(),
            offset,
            len: follower.len(),
            follower,
            follower_teacher,
            leader_teacher,
        })
        .collect())
}

fn input_rows<'a>(
    seqs: &'a [NnSequence],
    fs: FeatureSet,
    cfg: &'a PipelineConfig,
) -> impl Iterator<Item = Vec<f64>> + 'a {
    seqs.iter()
        .flat_map(move |s| (0..s.steps(cfg.horizon)).map(move |k| s.input_row(k, fs, cfg)))
}

/// Per-dimension input and target statistics over every step of the
/// training sequences.
pub fn compute_norm_stats(train: &[NnSequence], fs: FeatureSet, cfg: &PipelineConfig) -> Result<NormStats> {
    let inputs: Vec<Vec<f64>> = input_rows(train, fs, cfg).collect();
    let targets: Vec<[f64; TARGET_DIM]> = train
        .iter()
        .flat_map(|s| (0..s.steps(cfg.horizon)).map(move |k| s.target_row(k)))
        .collect();
    Ok(NormStats {
        input: Moments::from_rows(inputs.iter().map(Vec::as_slice))?,
        target: Moments::from_rows(targets.iter().map(|r| &r[..]))?,
    })
}

/// Build the padded, split dataset with statistics from the training
/// episodes only.
pub fn build_training_set(
    train_eps: &[Episode],
    val_eps: &[Episode],
    fs: FeatureSet,
    cfg: &PipelineConfig,
) -> Result<Dataset> {
    if train_eps.is_empty() {
        return Err(Error::arg("no training episodes"));
    }
    let mut all = Vec::new();
    let mut splits = Vec::new();
    for (eps, split) in [(train_eps, Split::Train), (val_eps, Split::Val)] {
        for ep in eps {
            for s in episode_sequences(ep, cfg)? {
                if s.len < cfg.horizon + 2 {
                    log::warn!(
                        "skipping sequence {} offset {}: {} steps is too short",
                        s.episode_id,
                        s.offset,
                        s.len
                    );
                    continue;
                }
                all.push(s);
                splits.push(split);
            }
        }
    }
    let mut f: Vec<_> = all.iter_mut().map(|s| std::mem::take(&mut s.follower)).collect();
    let mut ft: Vec<_> = all.iter_mut().map(|s| std::mem::take(&mut s.follower_teacher)).collect();
    let mut lt: Vec<_> = all.iter_mut().map(|s| std::mem::take(&mut s.leader_teacher)).collect();
    pad_sequences(&mut f)?;
    pad_sequences(&mut ft)?;
    pad_sequences(&mut lt)?;
    for (s, ((a, b), c)) in all.iter_mut().zip(f.into_iter().zip(ft).zip(lt)) {
        s.follower = a;
        s.follower_teacher = b;
        s.leader_teacher = c;
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (s, split) in all.into_iter().zip(splits) {
        match split {
            Split::Train => train.push(s),
            Split::Val => val.push(s),
        }
    }
    let stats = compute_norm_stats(&train, fs, cfg)?;
    Ok(Dataset {
        feature_set: fs,
        config: cfg.clone(),
        stats,
        train,
        val,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SequenceInfo {
    episode_id: String,
    offset: usize,
    len: usize,
    split: Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    version: u32,
    feature_set: FeatureSet,
    config: PipelineConfig,
    stats: NormStats,
    sequences: Vec<SequenceInfo>,
}

impl Dataset {
    pub fn input_dim(&self) -> usize {
        STATE_DIM + self.feature_set.dim()
    }

    pub fn steps(&self) -> usize {
        self.train.first().map_or(0, |s| s.steps(self.config.horizon))
    }

    fn normalized(&self, s: &NnSequence) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = s.steps(self.config.horizon);
        let mut input = Vec::with_capacity(n * self.input_dim());
        let mut target = Vec::with_capacity(n * TARGET_DIM);
        for k in 0..n {
            input.extend(normalize(&s.input_row(k, self.feature_set, &self.config), &self.stats.input)?);
            target.extend(normalize(&s.target_row(k), &self.stats.target)?);
        }
        Ok((input, target))
    }

    /// Normalized training and validation sequences. Training inputs get
    /// the configured noise, seeded per sequence from `noise_seed`.
    pub fn sequences(&self, noise_seed: u64) -> Result<(Vec<Sequence>, Vec<Sequence>)> {
        let make = |s: &NnSequence, noise: Option<u64>| -> Result<Sequence> {
            let n = s.steps(self.config.horizon);
            let (mut input, target) = self.normalized(s)?;
            if let Some(seed) = noise {
                input = add_noise(&input, self.config.noise_variance, seed)?;
            }
            Sequence::new(
                Mat::from_vec(n, self.input_dim(), input)?,
                Mat::from_vec(n, TARGET_DIM, target)?,
            )
        };
        let train = self
            .train
            .iter()
            .enumerate()
            .map(|(i, s)| make(s, Some(seed::derive(noise_seed, "noise", i as u64))))
            .collect::<Result<Vec<_>>>()?;
        let val = self.val.iter().map(|s| make(s, None)).collect::<Result<Vec<_>>>()?;
        Ok((train, val))
    }

    pub fn to_container(&self) -> Container<DatasetMeta> {
        let info = |s: &NnSequence, split| SequenceInfo {
            episode_id: s.episode_id.clone(),
            offset: s.offset,
            len: s.len,
            split,
        };
        let sequences = self
            .train
            .iter()
            .map(|s| info(s, Split::Train))
            .chain(self.val.iter().map(|s| info(s, Split::Val)))
            .collect();
        let mut c = Container::new(
            KIND,
            DatasetMeta {
                version: DATASET_FORMAT_VERSION,
                feature_set: self.feature_set,
                config: self.config.clone(),
                stats: self.stats.clone(),
                sequences,
            },
        );
        for (i, s) in self.train.iter().chain(&self.val).enumerate() {
            push_states(&mut c, &format!("s{i}.f"), &s.follower);
            push_states(&mut c, &format!("s{i}.ft"), &s.follower_teacher);
            push_states(&mut c, &format!("s{i}.lt"), &s.leader_teacher);
        }
        c
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.to_container().write(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let c: Container<DatasetMeta> = Container::read(path, KIND)?;
        if c.meta.version != DATASET_FORMAT_VERSION {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("unsupported dataset version {}", c.meta.version),
            });
        }
        let (mut train, mut val) = (Vec::new(), Vec::new());
        for (i, info) in c.meta.sequences.iter().enumerate() {
            let s = NnSequence {
                episode_id: info.episode_id.clone(),
                offset: info.offset,
                len: info.len,
                follower: read_states(&c, &format!("s{i}.f"), path)?,
                follower_teacher: read_states(&c, &format!("s{i}.ft"), path)?,
                leader_teacher: read_states(&c, &format!("s{i}.lt"), path)?,
            };
            match info.split {
                Split::Train => train.push(s),
                Split::Val => val.push(s),
            }
        }
        Ok(Dataset {
            feature_set: c.meta.feature_set,
            config: c.meta.config.clone(),
            stats: c.meta.stats.clone(),
            train,
            val,
        })
    }
}
