//! `cara` — experiment runner for the HetVNet CARA simulator and trainers.
//!
//! Subcommands:
//!   run    — train every seed of a config, writing metrics CSVs and checkpoints
//!   sweep  — repeat a run across values of one config key
//!   resume — continue a checkpointed run to its configured episode count

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cara_core::config::ExperimentConfig;
use cara_core::experiment;
use cara_core::train::Algo;

#[derive(Parser)]
#[command(name = "cara", version, about = "HetVNet cell-association and resource-allocation trainer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment for every seed in the seed list.
    Run {
        /// Config file (`key = value` lines; missing keys use defaults).
        #[arg(long)]
        config: PathBuf,
        /// Override the algorithm tag (maddpg|ddpg|ac|random).
        #[arg(long)]
        algo: Option<String>,
        /// Override the seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run once per value of one config key, e.g.
    /// `--param trainer.learning_rate --values 0.05,0.01,0.005`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Config key to sweep.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Continue a checkpointed run.
    Resume {
        /// Checkpoint directory written by a previous run.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Redirect outputs (defaults to the checkpoint's own out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(
    path: &PathBuf,
    algo: Option<&str>,
    seed: Option<u64>,
    out: Option<&PathBuf>,
) -> cara_core::Result<ExperimentConfig<f64>> {
    let mut cfg = ExperimentConfig::<f64>::from_file(path)?;
    if let Some(tag) = algo {
        cfg.run.algo = Algo::parse(tag)?;
    }
    if let Some(s) = seed {
        cfg.run.seeds = vec![s];
    }
    if let Some(dir) = out {
        cfg.run.out_dir = dir.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> cara_core::Result<()> {
    match cli.command {
        Command::Run {
            config,
            algo,
            seed,
            out,
        } => {
            let cfg = load_config(&config, algo.as_deref(), seed, out.as_ref())?;
            println!(
                "running {} for {} episodes x {} steps, seeds {:?} -> {}",
                cfg.run.algo.tag(),
                cfg.trainer.episodes,
                cfg.trainer.steps,
                cfg.run.seeds,
                cfg.run.out_dir.display()
            );
            experiment::run_experiment(&cfg)?;
            for &s in &cfg.run.seeds {
                println!(
                    "  wrote {}",
                    experiment::metrics_path(&cfg.run.out_dir, cfg.run.algo.tag(), s).display()
                );
            }
            Ok(())
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let cfg = load_config(&config, None, None, out.as_ref())?;
            let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
            println!(
                "sweeping {param} over {values:?} -> {}",
                cfg.run.out_dir.display()
            );
            experiment::sweep(&cfg, &param, &values)
        }
        Command::Resume { checkpoint, out } => {
            let csv = experiment::resume::<f64>(&checkpoint, out.as_deref())?;
            println!("resumed; wrote {}", csv.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
