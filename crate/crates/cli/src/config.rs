//! Experiment configuration: TOML file, presets and overrides.

use anyhow::{bail, Context, Result};
use scribe_core::datasets::{Glyph, PipelineConfig};
use scribe_core::hierarchy::FeedbackSpace;
use scribe_core::nn::{ModelKind, TrainHyper, DEFAULT_HIDDEN};
use scribe_core::sim::{PlanTiming, SimConfig};
use scribe_core::FeatureSet;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RasterConfig {
    pub width: usize,
    pub height: usize,
    /// Stroke radius in pixels.
    pub radius: usize,
}

impl Default for RasterConfig {
    fn default() -> Self {
        RasterConfig {
            width: 256,
            height: 256,
            radius: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutSettings {
    pub feedback_space: FeedbackSpace,
    pub init_perturbation: f64,
}

impl Default for RolloutSettings {
    fn default() -> Self {
        RolloutSettings {
            feedback_space: FeedbackSpace::Normalized,
            init_perturbation: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub master_seed: u64,
    /// Character the demonstrations are collected on.
    pub train_glyph: Glyph,
    pub demonstrations: usize,
    /// Leading demonstrations used for training; the rest validate.
    pub train_split: usize,
    /// Characters the policies are run on.
    pub glyphs: Vec<Glyph>,
    pub model_kinds: Vec<ModelKind>,
    pub feature_sets: Vec<FeatureSet>,
    pub feedback: Vec<bool>,
    pub runs: usize,
    pub hidden: usize,
    /// Worker threads for rollouts and training (0 = all cores).
    pub jobs: usize,
    pub out: PathBuf,
    pub train: TrainHyper,
    pub pipeline: PipelineConfig,
    pub rollout: RolloutSettings,
    pub raster: RasterConfig,
    pub plan: PlanTiming,
    pub sim: SimConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::main()
    }
}

impl ExperimentConfig {
    /// All three characters, MLP and LSTM on position/velocity/torque, with
    /// and without feedback.
    pub fn main() -> Self {
        ExperimentConfig {
            name: "main".into(),
            master_seed: 1,
            train_glyph: Glyph::A,
            demonstrations: 7,
            train_split: 5,
            glyphs: Glyph::ALL.to_vec(),
            model_kinds: vec![ModelKind::Mlp, ModelKind::Lstm],
            feature_sets: vec![FeatureSet::PosVelTrq],
            feedback: vec![false, true],
            runs: 5,
            hidden: DEFAULT_HIDDEN,
            jobs: 0,
            out: PathBuf::from("out/main"),
            train: TrainHyper::default(),
            pipeline: PipelineConfig::default(),
            rollout: RolloutSettings::default(),
            raster: RasterConfig::default(),
            plan: PlanTiming::default(),
            sim: SimConfig::default(),
        }
    }

    /// 'A' only, every feature set, no feedback.
    pub fn preliminary() -> Self {
        ExperimentConfig {
            name: "preliminary".into(),
            glyphs: vec![Glyph::A],
            feature_sets: FeatureSet::ALL.to_vec(),
            feedback: vec![false],
            out: PathBuf::from("out/preliminary"),
            ..ExperimentConfig::main()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "main" => Ok(Self::main()),
            "preliminary" => Ok(Self::preliminary()),
            _ => bail!("unknown experiment '{name}' (expected 'main' or 'preliminary')"),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: ExperimentConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            bail!("run count must be at least 1");
        }
        if self.train_split == 0 || self.train_split > self.demonstrations {
            bail!(
                "train split {} must be between 1 and the demonstration count {}",
                self.train_split,
                self.demonstrations
            );
        }
        if self.glyphs.is_empty() || self.model_kinds.is_empty() || self.feature_sets.is_empty() || self.feedback.is_empty() {
            bail!("glyphs, model kinds, feature sets and feedback flags must be non-empty");
        }
        if self.hidden == 0 {
            bail!("hidden width must be positive");
        }
        if self.pipeline.factor == 0 || self.pipeline.horizon == 0 {
            bail!("pipeline factor and horizon must be positive");
        }
        self.train.validate()?;
        self.sim.validate()?;
        Ok(())
    }

    /// Hash of the settings that affect artifact contents. The worker count
    /// and output directory do not.
    pub fn hash(&self) -> String {
        let canonical = ExperimentConfig {
            jobs: 0,
            out: PathBuf::new(),
            ..self.clone()
        };
        scribe_core::container::sha256_hex(&serde_json::to_vec(&canonical).expect("config serializes"))
    }
}
