use clap::{Args, Parser, Subcommand};
use scribe_cli::config::ExperimentConfig;
use scribe_cli::stages;
use std::path::PathBuf;
use std::process::ExitCode;

/// Bilateral-control imitation learning on a simulated writing arm.
#[derive(Parser)]
#[command(name = "scribe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// TOML configuration; missing keys take the preset's values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Preset used when no --config is given
    #[arg(long, global = true, default_value = "main")]
    preset: String,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Training epochs
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// Rollouts per condition
    #[arg(long, global = true)]
    runs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Record demonstrations and build the training datasets
    GenData,
    /// Train one policy per model kind and feature set
    Train,
    /// Run every condition autonomously
    Rollout,
    /// Score rollouts and write the reports
    Eval,
    /// Run the whole pipeline for a preset (main or preliminary)
    Experiment { name: Option<String> },
    /// Print the effective configuration as TOML
    PrintConfig,
}

fn resolve(opts: &Overrides, preset: &str) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &opts.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::preset(preset)?,
    };
    if let Some(s) = opts.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &opts.out {
        cfg.out = o.clone();
    }
    if let Some(j) = opts.jobs {
        cfg.jobs = j;
    }
    if let Some(e) = opts.epochs {
        cfg.train.epochs = e;
    }
    if let Some(r) = opts.runs {
        cfg.runs = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let preset = match &cli.command {
        Command::Experiment { name: Some(n) } => n.as_str(),
        _ => cli.opts.preset.as_str(),
    };
    let cfg = match resolve(&cli.opts, preset) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::PrintConfig => match cfg.to_toml() {
            Ok(t) => {
                print!("{t}");
                Ok(())
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        },
        Command::GenData => stages::write_config(&cfg)
            .map_err(|source| stages::StageError { stage: "gen-data", source })
            .and_then(|_| stages::gen_data(&cfg))
            .map(|m| println!("{} demonstrations, {} datasets", m.episodes.len(), m.datasets.len())),
        Command::Train => stages::train(&cfg).map(|p| println!("{} policies trained", p.len())),
        Command::Rollout => stages::rollout(&cfg).and_then(|f| {
            if f.failed.is_empty() {
                println!("all rollouts completed");
                Ok(())
            } else {
                for (file, why) in &f.failed {
                    eprintln!("failed: {file}: {why}");
                }
                Err(stages::StageError {
                    stage: "rollout",
                    source: anyhow::anyhow!("{} rollouts failed", f.failed.len()),
                })
            }
        }),
        Command::Eval | Command::Experiment { .. } => {
            let r = if matches!(cli.command, Command::Eval) {
                stages::eval(&cfg)
            } else {
                stages::experiment(&cfg)
            };
            r.map(|o| println!("{} runs scored; reports in {}", o.runs.len(), o.report_dir.display()))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
