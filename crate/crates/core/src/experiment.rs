//! Experiment orchestration: run every seed of a config, stream metrics to
//! CSV, drop checkpoints at the configured cadence, sweep one parameter
//! across values, and resume a checkpointed run so its remaining metric
//! rows match an uninterrupted run byte for byte (wall clock aside).

use std::fs;
use std::path::{Path, PathBuf};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::ExperimentConfig;
use crate::env::{build_topology, HetVNet};
use crate::error::Result;
use crate::metrics::{CsvWriter, MetricsRow};
use crate::scalar::Scalar;
use crate::train::{run_training, run_training_with, AgentBank, EpisodeMetrics, TrainerConfig};

/// Metrics CSV path for one (algo, seed) run.
pub fn metrics_path(out_dir: &Path, algo: &str, seed: u64) -> PathBuf {
    out_dir.join(format!("metrics_{algo}_seed{seed}.csv"))
}

/// Metrics CSV path for a resumed run.
pub fn resume_metrics_path(out_dir: &Path, algo: &str, seed: u64, from: usize) -> PathBuf {
    out_dir.join(format!("metrics_{algo}_seed{seed}_from{from}.csv"))
}

/// Checkpoint directory for one (algo, seed) run; `label` is an episode
/// number or "final".
pub fn checkpoint_dir(out_dir: &Path, algo: &str, seed: u64, label: &str) -> PathBuf {
    out_dir.join(format!("checkpoint_{algo}_seed{seed}_{label}"))
}

/// Builds the environment and agent bank for one seed and trains from
/// scratch without touching the filesystem. The acceptance suite and the
/// CSV-writing runner share this entry point.
pub fn train_run<S: Scalar>(
    cfg: &ExperimentConfig<S>,
    seed: u64,
) -> Result<(Vec<EpisodeMetrics>, AgentBank<S>)> {
    let topology = build_topology(&cfg.topology, seed)?;
    let mut env = HetVNet::new(topology)?;
    let trainer = TrainerConfig {
        seed,
        ..cfg.trainer.clone()
    };
    let mut bank = AgentBank::build(cfg.run.algo, env.vue_count(), env.action_len(), &trainer)?;
    let metrics = run_training(&mut env, &mut bank, &trainer)?;
    Ok((metrics, bank))
}

fn run_one_seed<S: Scalar>(cfg: &ExperimentConfig<S>, seed: u64) -> Result<()> {
    let algo = cfg.run.algo.tag();
    let lr = cfg.trainer.learning_rate.as_f64();
    let topology = build_topology(&cfg.topology, seed)?;
    let mut env = HetVNet::new(topology)?;
    let trainer = TrainerConfig {
        seed,
        ..cfg.trainer.clone()
    };
    let mut bank = AgentBank::build(cfg.run.algo, env.vue_count(), env.action_len(), &trainer)?;

    let mut csv = CsvWriter::create(&metrics_path(&cfg.run.out_dir, algo, seed))?;
    let cadence = cfg.run.checkpoint_every;
    run_training_with(&mut env, &mut bank, &trainer, 0, |bank, m| {
        csv.write_row(&MetricsRow::new(algo, seed, lr, m))?;
        let done = m.episode + 1;
        if cadence > 0 && done % cadence == 0 && done < trainer.episodes {
            let dir = checkpoint_dir(&cfg.run.out_dir, algo, seed, &format!("ep{done}"));
            save_checkpoint(&dir, cfg, seed, bank, done)?;
        }
        Ok(())
    })?;
    let final_dir = checkpoint_dir(&cfg.run.out_dir, algo, seed, "final");
    save_checkpoint(&final_dir, cfg, seed, &bank, trainer.episodes)?;
    Ok(())
}

/// Runs every seed in the config's seed list: writes the resolved-config
/// echo, one metrics CSV per seed, cadence checkpoints and a final
/// checkpoint set. Fails (nonzero exit at the CLI) on any abort.
pub fn run_experiment<S: Scalar>(cfg: &ExperimentConfig<S>) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.run.out_dir)?;
    fs::write(cfg.run.out_dir.join("resolved-config.txt"), cfg.echo())?;
    for &seed in &cfg.run.seeds {
        run_one_seed(cfg, seed)?;
    }
    Ok(())
}

/// Runs `run_experiment` once per value of `param`, each into the
/// subdirectory `<out>/<param>-<value>`. The jobs are independent, so they
/// run on parallel threads; each output tree is still fully deterministic.
pub fn sweep<S: Scalar>(base: &ExperimentConfig<S>, param: &str, values: &[String]) -> Result<()> {
    if values.is_empty() {
        return Err(crate::error::CaraError::InvalidArgument(
            "sweep needs at least one value".into(),
        ));
    }
    // Reject unknown parameters before spawning anything.
    let mut configs = Vec::with_capacity(values.len());
    for value in values {
        let mut cfg = base.clone();
        cfg.set_key(param, value)?;
        cfg.validate()?;
        let tag = format!("{param}-{value}").replace(['/', ' '], "_");
        cfg.run.out_dir = base.run.out_dir.join(tag);
        configs.push(cfg);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| scope.spawn(move || run_experiment(cfg)))
            .collect();
        let mut first_err = None;
        for h in handles {
            match h.join() {
                Ok(Ok(())) => {}
                Ok(Err(e)) => first_err = first_err.or(Some(e)),
                Err(_) => {
                    first_err = first_err.or(Some(crate::error::CaraError::InvalidArgument(
                        "sweep worker panicked".into(),
                    )))
                }
            }
        }
        match first_err {
            None => Ok(()),
            Some(e) => Err(e),
        }
    })
}

/// Continues a checkpointed run to its configured episode count. Metric
/// rows land in `metrics_<algo>_seed<s>_from<k>.csv` under `out_dir` (the
/// checkpoint's own out_dir unless overridden) and match the rows an
/// uninterrupted run would have produced.
pub fn resume<S: Scalar>(checkpoint: &Path, out_override: Option<&Path>) -> Result<PathBuf> {
    let loaded = load_checkpoint::<S>(checkpoint)?;
    let cfg = loaded.config;
    let seed = loaded.seed;
    let start = loaded.next_episode;
    let algo = cfg.run.algo.tag();
    let lr = cfg.trainer.learning_rate.as_f64();
    let out_dir = out_override.unwrap_or(&cfg.run.out_dir).to_path_buf();
    fs::create_dir_all(&out_dir)?;

    let topology = build_topology(&cfg.topology, seed)?;
    let mut env = HetVNet::new(topology)?;
    let trainer = TrainerConfig {
        seed,
        ..cfg.trainer.clone()
    };
    let mut bank = loaded.bank;

    let csv_path = resume_metrics_path(&out_dir, algo, seed, start);
    let mut csv = CsvWriter::create(&csv_path)?;
    let cadence = cfg.run.checkpoint_every;
    run_training_with(&mut env, &mut bank, &trainer, start, |bank, m| {
        csv.write_row(&MetricsRow::new(algo, seed, lr, m))?;
        let done = m.episode + 1;
        if cadence > 0 && done % cadence == 0 && done < trainer.episodes {
            let dir = checkpoint_dir(&out_dir, algo, seed, &format!("ep{done}"));
            save_checkpoint(&dir, &cfg, seed, bank, done)?;
        }
        Ok(())
    })?;
    let final_dir = checkpoint_dir(&out_dir, algo, seed, "final");
    save_checkpoint(&final_dir, &cfg, seed, &bank, trainer.episodes)?;
    Ok(csv_path)
}
