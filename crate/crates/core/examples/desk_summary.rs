//! Trains every algorithm on the desk preset and prints the summary the
//! comparison figures are built from: mean total reward and mean downlink
//! throughput over the final 50 episodes, per seed.
//!
//! Usage: cargo run --release -p cara-core --example desk_summary [config] [seeds...]

use cara_core::config::ExperimentConfig;
use cara_core::experiment::train_run;
use cara_core::train::Algo;

fn main() {
    let mut config_overrides = String::new();
    let mut seeds: Vec<u64> = Vec::new();
    for arg in std::env::args().skip(1) {
        match arg.parse::<u64>() {
            Ok(s) => seeds.push(s),
            Err(_) => config_overrides = std::fs::read_to_string(&arg).expect("config file"),
        }
    }
    if seeds.is_empty() {
        seeds = vec![1, 2, 3];
    }
    let window = 50;
    for algo in [Algo::Maddpg, Algo::Ddpg, Algo::VanillaAc, Algo::Random] {
        for &seed in &seeds {
            let mut cfg = ExperimentConfig::<f64>::desk();
            cfg.apply_text(&config_overrides).expect("overrides");
            cfg.run.algo = algo;
            let t0 = std::time::Instant::now();
            let (metrics, _) = train_run(&cfg, seed).expect("training failed");
            let tail = &metrics[metrics.len().saturating_sub(window)..];
            let mean_reward: f64 =
                tail.iter().map(|m| m.total_reward).sum::<f64>() / tail.len() as f64;
            let var: f64 = tail
                .iter()
                .map(|m| (m.total_reward - mean_reward).powi(2))
                .sum::<f64>()
                / tail.len() as f64;
            let mean_tp: f64 =
                tail.iter().map(|m| m.mean_throughput_mbps).sum::<f64>() / tail.len() as f64;
            println!(
                "{:>7} seed {}: reward {:>10.3} (std {:>8.3}), throughput {:>9.2} Mbps, {:>6.1}s",
                algo.tag(),
                seed,
                mean_reward,
                var.sqrt(),
                mean_tp,
                t0.elapsed().as_secs_f64()
            );
        }
    }
}
