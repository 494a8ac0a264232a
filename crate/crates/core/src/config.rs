//! Experiment configuration: a line-oriented `key = value` text format with
//! `#` comments and dotted section keys (`topology.*`, `trainer.*`,
//! `run.*`). Every field has a full-scale default and is individually
//! overridable; unknown keys are rejected with the offending line.

use std::path::{Path, PathBuf};

use crate::env::TopologyParams;
use crate::error::{CaraError, Result};
use crate::scalar::Scalar;
use crate::train::{Algo, TrainerConfig};

/// Run block: which algorithm, where to write, how often to checkpoint,
/// which seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub algo: Algo,
    pub out_dir: PathBuf,
    /// Checkpoint every this many episodes; 0 means final checkpoint only.
    pub checkpoint_every: usize,
    pub seeds: Vec<u64>,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            algo: Algo::Maddpg,
            out_dir: PathBuf::from("out"),
            checkpoint_every: 0,
            seeds: vec![1],
        }
    }
}

/// Full experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig<S> {
    pub topology: TopologyParams<S>,
    pub trainer: TrainerConfig<S>,
    pub run: RunParams,
}

impl<S: Scalar> Default for ExperimentConfig<S> {
    fn default() -> Self {
        ExperimentConfig {
            topology: TopologyParams::default(),
            trainer: TrainerConfig::default(),
            run: RunParams::default(),
        }
    }
}

/// Canonical key order used by the config echo.
pub const CONFIG_KEYS: &[&str] = &[
    "topology.mabs_count",
    "topology.mibs_count",
    "topology.pbs_count",
    "topology.vue_count",
    "topology.mabs_radius_m",
    "topology.mibs_radius_m",
    "topology.pbs_radius_m",
    "topology.mabs_power_dbm",
    "topology.mibs_power_dbm",
    "topology.pbs_power_dbm",
    "topology.shared_bandwidth_hz",
    "topology.mmwave_bandwidth_hz",
    "topology.shared_pathloss_a",
    "topology.shared_pathloss_b",
    "topology.pico_pathloss_a",
    "topology.pico_pathloss_b",
    "topology.shared_channels",
    "topology.mmwave_channels",
    "topology.max_channels",
    "topology.qos_threshold_db",
    "topology.noise_density_dbm_hz",
    "topology.rho",
    "topology.eta",
    "topology.upsilon",
    "trainer.episodes",
    "trainer.steps",
    "trainer.minibatch",
    "trainer.gamma",
    "trainer.tau",
    "trainer.noise_initial",
    "trainer.noise_final",
    "trainer.noise_decay_episodes",
    "trainer.learning_rate",
    "trainer.buffer_capacity",
    "run.algo",
    "run.out_dir",
    "run.checkpoint_every",
    "run.seeds",
];

fn invalid(key: &str, message: impl Into<String>) -> CaraError {
    CaraError::ConfigInvalid {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, kind: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| invalid(key, format!("`{value}` is not a valid {kind}")))
}

impl<S: Scalar> ExperimentConfig<S> {
    /// Full-scale defaults.
    pub fn full_scale() -> Self {
        Self::default()
    }

    /// Desk-scale preset: 1 macro, 2 micro, 4 pico, 4 VUEs, S=6, P=3,
    /// 300 episodes of 50 steps. Geometry is shrunk so the pico tier covers
    /// the whole region (pico radius at least the disc diameter) and pico
    /// transmit power is raised to 30 dBm, keeping the learning signal dense
    /// enough for CI-sized runs.
    pub fn desk() -> Self {
        let mut cfg = Self::default();
        cfg.topology.mabs_count = 1;
        cfg.topology.mibs_count = 2;
        cfg.topology.pbs_count = 4;
        cfg.topology.vue_count = 4;
        cfg.topology.mabs_radius_m = S::c(60.0);
        cfg.topology.mibs_radius_m = S::c(60.0);
        cfg.topology.pbs_radius_m = S::c(120.0);
        cfg.topology.pbs_power_dbm = S::c(30.0);
        cfg.topology.shared_channels = 6;
        cfg.topology.mmwave_channels = 3;
        cfg.trainer.episodes = 300;
        cfg.trainer.steps = 50;
        cfg.trainer.noise_decay_episodes = 240;
        cfg
    }

    /// Parses config text on top of the full-scale defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::full_scale();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Applies `key = value` lines to this config. Errors name the key and
    /// the 1-based line.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(CaraError::ConfigParse {
                    line,
                    key: content.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            let key = key.trim();
            self.set_key(key, value.trim()).map_err(|e| match e {
                CaraError::ConfigInvalid { key, message } => {
                    CaraError::ConfigParse { line, key, message }
                }
                other => other,
            })?;
        }
        Ok(())
    }

    /// Sets one field from its text form. Used by the parser and by sweeps.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.topology;
        let tr = &mut self.trainer;
        match key {
            "topology.mabs_count" => t.mabs_count = parse_num(key, value, "count")?,
            "topology.mibs_count" => t.mibs_count = parse_num(key, value, "count")?,
            "topology.pbs_count" => t.pbs_count = parse_num(key, value, "count")?,
            "topology.vue_count" => t.vue_count = parse_num(key, value, "count")?,
            "topology.mabs_radius_m" => t.mabs_radius_m = Self::scalar(key, value)?,
            "topology.mibs_radius_m" => t.mibs_radius_m = Self::scalar(key, value)?,
            "topology.pbs_radius_m" => t.pbs_radius_m = Self::scalar(key, value)?,
            "topology.mabs_power_dbm" => t.mabs_power_dbm = Self::scalar(key, value)?,
            "topology.mibs_power_dbm" => t.mibs_power_dbm = Self::scalar(key, value)?,
            "topology.pbs_power_dbm" => t.pbs_power_dbm = Self::scalar(key, value)?,
            "topology.shared_bandwidth_hz" => t.shared_bandwidth_hz = Self::scalar(key, value)?,
            "topology.mmwave_bandwidth_hz" => t.mmwave_bandwidth_hz = Self::scalar(key, value)?,
            "topology.shared_pathloss_a" => t.shared_pathloss_a = Self::scalar(key, value)?,
            "topology.shared_pathloss_b" => t.shared_pathloss_b = Self::scalar(key, value)?,
            "topology.pico_pathloss_a" => t.pico_pathloss_a = Self::scalar(key, value)?,
            "topology.pico_pathloss_b" => t.pico_pathloss_b = Self::scalar(key, value)?,
            "topology.shared_channels" => t.shared_channels = parse_num(key, value, "count")?,
            "topology.mmwave_channels" => t.mmwave_channels = parse_num(key, value, "count")?,
            "topology.max_channels" => t.max_channels = parse_num(key, value, "count")?,
            "topology.qos_threshold_db" => t.qos_threshold_db = Self::scalar(key, value)?,
            "topology.noise_density_dbm_hz" => t.noise_density_dbm_hz = Self::scalar(key, value)?,
            "topology.rho" => t.rho = Self::scalar(key, value)?,
            "topology.eta" => t.eta = Self::scalar(key, value)?,
            "topology.upsilon" => t.upsilon = Self::scalar(key, value)?,
            "trainer.episodes" => tr.episodes = parse_num(key, value, "count")?,
            "trainer.steps" => tr.steps = parse_num(key, value, "count")?,
            "trainer.minibatch" => tr.minibatch = parse_num(key, value, "count")?,
            "trainer.gamma" => {
                let g: f64 = parse_num(key, value, "number")?;
                if !(0.0..1.0).contains(&g) {
                    return Err(invalid(key, format!("gamma must lie in [0, 1), got {g}")));
                }
                tr.gamma = S::c(g);
            }
            "trainer.tau" => {
                let v: f64 = parse_num(key, value, "number")?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(invalid(key, format!("tau must lie in [0, 1], got {v}")));
                }
                tr.tau = S::c(v);
            }
            "trainer.noise_initial" => tr.noise_initial = Self::scalar(key, value)?,
            "trainer.noise_final" => tr.noise_final = Self::scalar(key, value)?,
            "trainer.noise_decay_episodes" => {
                tr.noise_decay_episodes = parse_num(key, value, "count")?
            }
            "trainer.learning_rate" => tr.learning_rate = Self::scalar(key, value)?,
            "trainer.buffer_capacity" => tr.buffer_capacity = parse_num(key, value, "count")?,
            "run.algo" => self.run.algo = Algo::parse(value)?,
            "run.out_dir" => self.run.out_dir = PathBuf::from(value),
            "run.checkpoint_every" => self.run.checkpoint_every = parse_num(key, value, "count")?,
            "run.seeds" => {
                let mut seeds = Vec::new();
                for part in value.split(',') {
                    seeds.push(parse_num::<u64>(key, part, "seed")?);
                }
                if seeds.is_empty() {
                    return Err(invalid(key, "seed list must not be empty"));
                }
                self.run.seeds = seeds;
            }
            _ => return Err(invalid(key, "unknown key")),
        }
        Ok(())
    }

    fn scalar(key: &str, value: &str) -> Result<S> {
        let v: f64 = parse_num(key, value, "number")?;
        if !v.is_finite() {
            return Err(invalid(key, "value must be finite"));
        }
        Ok(S::c(v))
    }

    /// Cross-field invariants, named per key.
    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        let tr = &self.trainer;
        let positive_counts = [
            ("topology.mabs_count", t.mabs_count),
            ("topology.mibs_count", t.mibs_count),
            ("topology.pbs_count", t.pbs_count),
            ("topology.vue_count", t.vue_count),
            ("topology.shared_channels", t.shared_channels),
            ("topology.mmwave_channels", t.mmwave_channels),
            ("topology.max_channels", t.max_channels),
            ("trainer.episodes", tr.episodes),
            ("trainer.steps", tr.steps),
            ("trainer.minibatch", tr.minibatch),
            ("trainer.buffer_capacity", tr.buffer_capacity),
        ];
        for (key, v) in positive_counts {
            if v == 0 {
                return Err(invalid(key, "must be positive"));
            }
        }
        let positive_scalars = [
            ("topology.mabs_radius_m", t.mabs_radius_m),
            ("topology.mibs_radius_m", t.mibs_radius_m),
            ("topology.pbs_radius_m", t.pbs_radius_m),
            ("topology.shared_bandwidth_hz", t.shared_bandwidth_hz),
            ("topology.mmwave_bandwidth_hz", t.mmwave_bandwidth_hz),
            ("trainer.learning_rate", tr.learning_rate),
        ];
        for (key, v) in positive_scalars {
            if !(v > S::zero()) {
                return Err(invalid(key, "must be positive"));
            }
        }
        if tr.gamma < S::zero() || tr.gamma >= S::one() {
            return Err(invalid("trainer.gamma", "gamma must lie in [0, 1)"));
        }
        if tr.tau < S::zero() || tr.tau > S::one() {
            return Err(invalid("trainer.tau", "tau must lie in [0, 1]"));
        }
        if tr.noise_initial < S::zero() || tr.noise_final < S::zero() {
            return Err(invalid("trainer.noise_initial", "noise scales must be non-negative"));
        }
        if tr.minibatch > tr.buffer_capacity {
            return Err(invalid(
                "trainer.minibatch",
                format!(
                    "minibatch ({}) must not exceed buffer capacity ({})",
                    tr.minibatch, tr.buffer_capacity
                ),
            ));
        }
        if self.run.seeds.is_empty() {
            return Err(invalid("run.seeds", "seed list must not be empty"));
        }
        Ok(())
    }

    fn value_of(&self, key: &str) -> String {
        let t = &self.topology;
        let tr = &self.trainer;
        let f = |v: S| format!("{:?}", v.as_f64());
        match key {
            "topology.mabs_count" => t.mabs_count.to_string(),
            "topology.mibs_count" => t.mibs_count.to_string(),
            "topology.pbs_count" => t.pbs_count.to_string(),
            "topology.vue_count" => t.vue_count.to_string(),
            "topology.mabs_radius_m" => f(t.mabs_radius_m),
            "topology.mibs_radius_m" => f(t.mibs_radius_m),
            "topology.pbs_radius_m" => f(t.pbs_radius_m),
            "topology.mabs_power_dbm" => f(t.mabs_power_dbm),
            "topology.mibs_power_dbm" => f(t.mibs_power_dbm),
            "topology.pbs_power_dbm" => f(t.pbs_power_dbm),
            "topology.shared_bandwidth_hz" => f(t.shared_bandwidth_hz),
            "topology.mmwave_bandwidth_hz" => f(t.mmwave_bandwidth_hz),
            "topology.shared_pathloss_a" => f(t.shared_pathloss_a),
            "topology.shared_pathloss_b" => f(t.shared_pathloss_b),
            "topology.pico_pathloss_a" => f(t.pico_pathloss_a),
            "topology.pico_pathloss_b" => f(t.pico_pathloss_b),
            "topology.shared_channels" => t.shared_channels.to_string(),
            "topology.mmwave_channels" => t.mmwave_channels.to_string(),
            "topology.max_channels" => t.max_channels.to_string(),
            "topology.qos_threshold_db" => f(t.qos_threshold_db),
            "topology.noise_density_dbm_hz" => f(t.noise_density_dbm_hz),
            "topology.rho" => f(t.rho),
            "topology.eta" => f(t.eta),
            "topology.upsilon" => f(t.upsilon),
            "trainer.episodes" => tr.episodes.to_string(),
            "trainer.steps" => tr.steps.to_string(),
            "trainer.minibatch" => tr.minibatch.to_string(),
            "trainer.gamma" => f(tr.gamma),
            "trainer.tau" => f(tr.tau),
            "trainer.noise_initial" => f(tr.noise_initial),
            "trainer.noise_final" => f(tr.noise_final),
            "trainer.noise_decay_episodes" => tr.noise_decay_episodes.to_string(),
            "trainer.learning_rate" => f(tr.learning_rate),
            "trainer.buffer_capacity" => tr.buffer_capacity.to_string(),
            "run.algo" => self.run.algo.tag().to_string(),
            "run.out_dir" => self.run.out_dir.display().to_string(),
            "run.checkpoint_every" => self.run.checkpoint_every.to_string(),
            "run.seeds" => self
                .run
                .seeds
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
            other => unreachable!("echo of unknown key {other}"),
        }
    }

    /// Text echo of every effective value; parsing it back reproduces this
    /// config exactly.
    pub fn echo(&self) -> String {
        let mut out = String::from("# resolved configuration\n");
        for key in CONFIG_KEYS {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&self.value_of(key));
            out.push('\n');
        }
        out
    }
}
