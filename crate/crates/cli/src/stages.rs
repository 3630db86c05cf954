//! Pipeline stages. Every stage reads its inputs from and writes its outputs
//! to the configured output directory, and records them in the manifest.

use crate::config::ExperimentConfig;
use crate::manifest::Manifest;
use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use scribe_core::datasets::{build_training_set, Dataset, Glyph};
use scribe_core::eval::{angular_error, emit_report, iou, rasterize, InkImage, Overlay, RunRecord};
use scribe_core::hierarchy::{run_autonomous, NetPolicy, RolloutConfig, RolloutLog, UpperReplay};
use scribe_core::nn::{fit, Arch, ModelKind, NormStats, PolicyRecord};
use scribe_core::seed;
use scribe_core::sim::{run_demonstration, Episode};
use scribe_core::FeatureSet;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// A stage failure; the CLI maps it to exit code 1.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub source: anyhow::Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} failed: {:#}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {}

fn stage<T>(name: &'static str, r: Result<T>) -> std::result::Result<T, StageError> {
    r.map_err(|source| StageError { stage: name, source })
}

/// One cell of the evaluation grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Condition {
    pub glyph: Glyph,
    pub kind: ModelKind,
    pub feature_set: FeatureSet,
    pub feedback: bool,
}

impl Condition {
    pub fn id(&self) -> String {
        format!(
            "{}-{}-{}-fb{}",
            self.glyph,
            self.kind,
            self.feature_set,
            u8::from(self.feedback)
        )
    }
}

pub fn conditions(cfg: &ExperimentConfig) -> Vec<Condition> {
    let mut out = Vec::new();
    for &glyph in &cfg.glyphs {
        for &kind in &cfg.model_kinds {
            for &feature_set in &cfg.feature_sets {
                for &feedback in &cfg.feedback {
                    out.push(Condition {
                        glyph,
                        kind,
                        feature_set,
                        feedback,
                    });
                }
            }
        }
    }
    out
}

/// Relative artifact paths.
pub mod layout {
    use super::*;

    pub fn demo(i: usize) -> PathBuf {
        PathBuf::from(format!("episodes/demo-{i}.episode"))
    }
    pub fn reference(g: Glyph) -> PathBuf {
        PathBuf::from(format!("episodes/reference-{g}.episode"))
    }
    pub fn dataset(fs: FeatureSet) -> PathBuf {
        PathBuf::from(format!("datasets/{fs}.dataset"))
    }
    pub fn dataset_manifest() -> PathBuf {
        PathBuf::from("datasets/manifest.json")
    }
    pub fn policy(kind: ModelKind, fs: FeatureSet) -> PathBuf {
        PathBuf::from(format!("policies/{kind}-{fs}.policy"))
    }
    pub fn loss_curve(kind: ModelKind, fs: FeatureSet) -> PathBuf {
        PathBuf::from(format!("policies/{kind}-{fs}.loss.csv"))
    }
    pub fn rollout(c: &Condition, run: usize) -> PathBuf {
        PathBuf::from(format!("rollouts/{}-run{run}.rollout", c.id()))
    }
    pub fn failures() -> PathBuf {
        PathBuf::from("rollouts/failures.json")
    }
    pub fn reports() -> PathBuf {
        PathBuf::from("reports")
    }
}

fn ensure_dir(root: &Path, rel: &str) -> Result<()> {
    let d = root.join(rel);
    fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))
}

fn pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build()?)
}

fn save_manifest(cfg: &ExperimentConfig, f: impl FnOnce(&mut Manifest) -> Result<()>) -> Result<()> {
    let mut m = Manifest::open(&cfg.out, &cfg.hash())?;
    f(&mut m)?;
    m.write(&cfg.out)
}

fn demo_seed(cfg: &ExperimentConfig, i: usize) -> u64 {
    seed::derive(cfg.master_seed, "demo", i as u64)
}

fn run_seed(cfg: &ExperimentConfig, run: usize) -> u64 {
    seed::derive(cfg.master_seed, "rollout", run as u64)
}

fn train_seed(cfg: &ExperimentConfig, kind: ModelKind, fs: FeatureSet) -> u64 {
    seed::derive(cfg.master_seed, &format!("train-{kind}-{fs}"), 0)
}

fn noise_seed(cfg: &ExperimentConfig, fs: FeatureSet) -> u64 {
    seed::derive(cfg.master_seed, &format!("noise-{fs}"), 0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEntry {
    pub file: String,
    pub sha256: String,
    pub split: String,
    pub plan_id: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub file: String,
    pub feature_set: FeatureSet,
    pub train_sequences: usize,
    pub val_sequences: usize,
    pub steps: usize,
    pub noise_seed: u64,
    pub stats: NormStats,
}

/// Human-readable summary of the corpus and the datasets built from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub master_seed: u64,
    pub episodes: Vec<EpisodeEntry>,
    pub references: Vec<EpisodeEntry>,
    pub datasets: Vec<DatasetEntry>,
}

/// Seeded demonstrations of the training character, one nominal reference
/// demonstration per character, and one dataset per feature set.
pub fn gen_data(cfg: &ExperimentConfig) -> std::result::Result<DatasetManifest, StageError> {
    stage("gen-data", gen_data_inner(cfg))
}

fn gen_data_inner(cfg: &ExperimentConfig) -> Result<DatasetManifest> {
    let root = &cfg.out;
    ensure_dir(root, "episodes")?;
    ensure_dir(root, "datasets")?;
    let pool = pool(cfg)?;
    let board = cfg.sim.board;
    let demos: Vec<Episode> = pool.install(|| {
        (0..cfg.demonstrations)
            .into_par_iter()
            .map(|i| {
                let s = demo_seed(cfg, i);
                let plan = cfg.train_glyph.plan(Some(s), &cfg.plan, &board)?;
                run_demonstration(&plan, s, &cfg.sim).with_context(|| format!("demonstration {i}"))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut refs_needed: Vec<Glyph> = cfg.glyphs.clone();
    refs_needed.sort();
    refs_needed.dedup();
    let refs: Vec<(Glyph, Episode)> = pool.install(|| {
        refs_needed
            .par_iter()
            .map(|&g| {
                let s = seed::derive(cfg.master_seed, "reference", g as u64);
                let plan = g.plan(None, &cfg.plan, &board)?;
                let ep = run_demonstration(&plan, s, &cfg.sim).with_context(|| format!("reference demonstration of {g}"))?;
                Ok((g, ep))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut manifest = DatasetManifest {
        master_seed: cfg.master_seed,
        episodes: Vec::new(),
        references: Vec::new(),
        datasets: Vec::new(),
    };
    let mut written = Vec::new();
    for (i, ep) in demos.iter().enumerate() {
        let rel = layout::demo(i);
        ep.write(&root.join(&rel))?;
        manifest.episodes.push(EpisodeEntry {
            file: rel.to_string_lossy().into(),
            sha256: scribe_core::container::file_sha256(&root.join(&rel))?,
            split: if i < cfg.train_split { "train" } else { "val" }.into(),
            plan_id: ep.plan_id.clone(),
            seed: ep.seed,
        });
        written.push((rel, "episode", vec![PathBuf::from("config")]));
    }
    for (g, ep) in &refs {
        let rel = layout::reference(*g);
        ep.write(&root.join(&rel))?;
        manifest.references.push(EpisodeEntry {
            file: rel.to_string_lossy().into(),
            sha256: scribe_core::container::file_sha256(&root.join(&rel))?,
            split: "reference".into(),
            plan_id: ep.plan_id.clone(),
            seed: ep.seed,
        });
        written.push((rel, "episode", vec![PathBuf::from("config")]));
    }
    let demo_paths: Vec<PathBuf> = (0..demos.len()).map(layout::demo).collect();
    let (train_eps, val_eps) = demos.split_at(cfg.train_split);
    for &fs in &cfg.feature_sets {
        let ds = build_training_set(train_eps, val_eps, fs, &cfg.pipeline)?;
        let rel = layout::dataset(fs);
        ds.write(&root.join(&rel))?;
        log::info!(
            "dataset {fs}: {} training and {} validation sequences of {} steps",
            ds.train.len(),
            ds.val.len(),
            ds.steps()
        );
        manifest.datasets.push(DatasetEntry {
            file: rel.to_string_lossy().into(),
            feature_set: fs,
            train_sequences: ds.train.len(),
            val_sequences: ds.val.len(),
            steps: ds.steps(),
            noise_seed: noise_seed(cfg, fs),
            stats: ds.stats.clone(),
        });
        written.push((rel, "dataset", demo_paths.clone()));
    }
    let rel = layout::dataset_manifest();
    fs::write(root.join(&rel), serde_json::to_string_pretty(&manifest)? + "\n")?;
    let mut inputs = demo_paths.clone();
    inputs.extend(cfg.feature_sets.iter().map(|&fs| layout::dataset(fs)));
    written.push((rel, "dataset-manifest", inputs));
    save_manifest(cfg, |m| {
        for (rel, kind, inputs) in &written {
            m.record(root, rel, kind, inputs)?;
        }
        Ok(())
    })?;
    Ok(manifest)
}

/// Train one policy per (model kind, feature set).
pub fn train(cfg: &ExperimentConfig) -> std::result::Result<Vec<PathBuf>, StageError> {
    stage("train", train_inner(cfg))
}

fn train_inner(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let root = &cfg.out;
    ensure_dir(root, "policies")?;
    let mut combos = Vec::new();
    for &kind in &cfg.model_kinds {
        for &fs in &cfg.feature_sets {
            combos.push((kind, fs));
        }
    }
    let pool = pool(cfg)?;
    let results: Vec<Result<PathBuf>> = pool.install(|| {
        combos
            .par_iter()
            .map(|&(kind, fs)| {
                let ds_rel = layout::dataset(fs);
                let ds = Dataset::read(&root.join(&ds_rel))
                    .with_context(|| format!("loading the {fs} dataset (run gen-data first)"))?;
                let (train, val) = ds.sequences(noise_seed(cfg, fs))?;
                let hyper = scribe_core::nn::TrainHyper {
                    seed: train_seed(cfg, kind, fs),
                    ..cfg.train.clone()
                };
                log::info!("training {kind} on {fs} for {} epochs", hyper.epochs);
                let arch = Arch {
                    kind,
                    hidden: cfg.hidden,
                };
                let (params, tlog) = fit(&train, &val, arch, &hyper).with_context(|| format!("training {kind}-{fs}"))?;
                let rec = PolicyRecord::new(params, ds.stats.clone(), fs, hyper.seed, Some(&tlog));
                let rel = layout::policy(kind, fs);
                rec.write(&root.join(&rel))?;
                let mut curve = String::from("epoch,train_loss,val_loss\n");
                for e in &tlog.epochs {
                    let _ = writeln!(
                        curve,
                        "{},{},{}",
                        e.epoch,
                        e.train_loss,
                        e.val_loss.map_or(String::new(), |v| v.to_string())
                    );
                }
                fs::write(root.join(layout::loss_curve(kind, fs)), curve)?;
                log::info!(
                    "{kind}-{fs}: final training loss {:?}, validation loss {:?}",
                    tlog.final_train_loss(),
                    tlog.final_val_loss()
                );
                Ok(rel)
            })
            .collect()
    });
    let mut done = Vec::new();
    let mut errors = Vec::new();
    for (r, (kind, fs)) in results.into_iter().zip(&combos) {
        match r {
            Ok(p) => done.push((p, *kind, *fs)),
            Err(e) => errors.push(format!("{kind}-{fs}: {e:#}")),
        }
    }
    save_manifest(cfg, |m| {
        for (rel, kind, fs) in &done {
            m.record(root, rel, "policy", &[layout::dataset(*fs)])?;
            m.record(root, &layout::loss_curve(*kind, *fs), "loss-curve", &[layout::dataset(*fs)])?;
        }
        Ok(())
    })?;
    if !errors.is_empty() {
        bail!("training diverged for {}", errors.join("; "));
    }
    Ok(done.into_iter().map(|d| d.0).collect())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RolloutFailures {
    /// `(rollout file, reason)`
    pub failed: Vec<(String, String)>,
}

fn load_replay(root: &Path, g: Glyph, fs: FeatureSet, cfg: &ExperimentConfig) -> Result<UpperReplay> {
    let ep = Episode::read(&root.join(layout::reference(g)))
        .with_context(|| format!("loading the reference demonstration of {g}"))?;
    Ok(UpperReplay::from_episode(&ep, fs, cfg.pipeline.factor, cfg.pipeline.horizon)?)
}

/// Run every condition `runs` times. A failing run is recorded and the
/// rest of the grid continues.
pub fn rollout(cfg: &ExperimentConfig) -> std::result::Result<RolloutFailures, StageError> {
    stage("rollout", rollout_inner(cfg))
}

fn rollout_inner(cfg: &ExperimentConfig) -> Result<RolloutFailures> {
    let root = &cfg.out;
    ensure_dir(root, "rollouts")?;
    let mut jobs = Vec::new();
    for c in conditions(cfg) {
        for run in 0..cfg.runs {
            jobs.push((c, run));
        }
    }
    let pool = pool(cfg)?;
    let results: Vec<Result<()>> = pool.install(|| {
        jobs.par_iter()
            .map(|(c, run)| {
                let policy_rel = layout::policy(c.kind, c.feature_set);
                let rec = PolicyRecord::read(&root.join(&policy_rel))
                    .with_context(|| format!("loading {} (run train first)", policy_rel.display()))?;
                let replay = load_replay(root, c.glyph, c.feature_set, cfg)?;
                let rc = RolloutConfig {
                    feedback: c.feedback,
                    feedback_space: cfg.rollout.feedback_space,
                    seed: run_seed(cfg, *run),
                    init_perturbation: cfg.rollout.init_perturbation,
                    sim: cfg.sim.clone(),
                };
                let mut policy = NetPolicy::new(rec);
                let log = run_autonomous(&mut policy, &policy_rel.to_string_lossy(), &replay, &rc)?;
                log.write(&root.join(layout::rollout(c, *run)))?;
                Ok(())
            })
            .collect()
    });
    let mut failures = RolloutFailures::default();
    let mut ok = Vec::new();
    for (r, (c, run)) in results.into_iter().zip(&jobs) {
        let rel = layout::rollout(c, *run);
        match r {
            Ok(()) => ok.push((rel, *c)),
            Err(e) => {
                log::warn!("{} failed: {e:#}", rel.display());
                let _ = fs::remove_file(root.join(&rel));
                failures.failed.push((rel.to_string_lossy().into(), format!("{e:#}")));
            }
        }
    }
    fs::write(root.join(layout::failures()), serde_json::to_string_pretty(&failures)? + "\n")?;
    save_manifest(cfg, |m| {
        for (rel, c) in &ok {
            m.record(
                root,
                rel,
                "rollout",
                &[layout::policy(c.kind, c.feature_set), layout::reference(c.glyph)],
            )?;
        }
        Ok(())
    })?;
    Ok(failures)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOutcome {
    pub runs: Vec<RunRecord>,
    pub missing: Vec<String>,
    pub report_dir: PathBuf,
}

/// Score every rollout against its reference and write the reports.
/// Missing rollouts are listed and make the stage fail after the reports
/// for the available runs are written.
pub fn eval(cfg: &ExperimentConfig) -> std::result::Result<EvalOutcome, StageError> {
    stage("eval", eval_inner(cfg))
}

fn eval_inner(cfg: &ExperimentConfig) -> Result<EvalOutcome> {
    let root = &cfg.out;
    let r = &cfg.raster;
    let board = cfg.sim.board;
    let mut references: Vec<(Glyph, InkImage)> = Vec::new();
    for &g in &cfg.glyphs {
        if references.iter().any(|(h, _)| *h == g) {
            continue;
        }
        let ep = Episode::read(&root.join(layout::reference(g)))
            .with_context(|| format!("loading the reference demonstration of {g}"))?;
        references.push((g, rasterize(&ep.ink, &board, r.width, r.height, r.radius)?));
    }
    let reference = |g: Glyph| &references.iter().find(|(h, _)| *h == g).unwrap().1;

    let mut runs = Vec::new();
    let mut missing = Vec::new();
    let mut images: Vec<(String, Glyph, InkImage)> = Vec::new();
    let mut inputs = Vec::new();
    for c in conditions(cfg) {
        for run in 0..cfg.runs {
            let rel = layout::rollout(&c, run);
            let path = root.join(&rel);
            if !path.exists() {
                missing.push(rel.to_string_lossy().into_owned());
                continue;
            }
            let log = RolloutLog::read(&path)?;
            let img = rasterize(&log.ink, &board, r.width, r.height, r.radius)?;
            let ae = angular_error(&log.reference_angles(), &log.angles())?;
            runs.push(RunRecord {
                condition: c.id(),
                model: c.kind.to_string(),
                character: c.glyph.to_string(),
                feedback: c.feedback,
                seed: log.seed,
                iou: iou(reference(c.glyph), &img)?,
                angular_error_abs: ae.abs,
                angular_error_mse: ae.mse,
            });
            if run == 0 {
                images.push((format!("{}-run0", c.id()), c.glyph, img));
            }
            inputs.push(rel);
        }
    }
    let overlays: Vec<Overlay<'_>> = images
        .iter()
        .map(|(name, g, img)| Overlay {
            name: name.clone(),
            reference: reference(*g),
            output: img,
        })
        .collect();
    let dir = root.join(layout::reports());
    let files = emit_report(&runs, &overlays, &dir)?;
    inputs.extend(references.iter().map(|(g, _)| layout::reference(*g)));
    save_manifest(cfg, |m| {
        let rel = |p: &Path| p.strip_prefix(root).map(Path::to_path_buf).unwrap_or_else(|_| p.to_path_buf());
        for p in [&files.runs_csv, &files.summary_csv, &files.summary_svg]
            .into_iter()
            .chain(&files.overlays)
        {
            m.record(root, &rel(p), "report", &inputs)?;
        }
        Ok(())
    })?;
    if !missing.is_empty() {
        return Err(anyhow!("missing rollouts: {}", missing.join(", ")));
    }
    Ok(EvalOutcome {
        runs,
        missing,
        report_dir: dir,
    })
}

/// gen-data → train → rollout → eval.
pub fn experiment(cfg: &ExperimentConfig) -> std::result::Result<EvalOutcome, StageError> {
    write_config(cfg).map_err(|source| StageError {
        stage: "experiment",
        source,
    })?;
    gen_data(cfg)?;
    train(cfg)?;
    let failures = rollout(cfg)?;
    if !failures.failed.is_empty() {
        log::warn!("{} rollouts failed; see {}", failures.failed.len(), layout::failures().display());
    }
    eval(cfg)
}

/// Dump the effective configuration next to the artifacts.
pub fn write_config(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let path = cfg.out.join("config.toml");
    fs::write(&path, cfg.to_toml()?).with_context(|| format!("writing {}", path.display()))
}
