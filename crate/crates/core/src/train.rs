//! The shared training loop: one entry point drives MADDPG, decentralized
//! DDPG, the vanilla actor-critic and the uniform-random yardstick against
//! the same environment and metrics pipeline, switched by an algorithm tag.
//!
//! Loop shape per episode: reset, then per step act -> execute -> observe ->
//! store -> per-agent updates (once the buffer holds a minibatch), and one
//! soft target sync per episode. Exploration noise decays linearly from
//! `noise_initial` to `noise_final` across `noise_decay_episodes`.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{
    ac_agent, ac_select_action, ac_update, ddpg_agent, ddpg_sync_targets, ddpg_update, DdpgAgent,
    VanillaAcAgent,
};
use crate::env::{HetVNet, JointAction};
use crate::error::{CaraError, Result};
use crate::maddpg::{
    actor_update, critic_targets, critic_update, maddpg_agent, select_action, sync_targets,
    AgentPack, OBS_DIM,
};
use crate::replay::{ReplayBuffer, Transition};
use crate::rng::{mix, salt, stream};
use crate::scalar::Scalar;

/// Algorithm switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Maddpg,
    Ddpg,
    VanillaAc,
    Random,
}

impl Algo {
    pub fn tag(self) -> &'static str {
        match self {
            Algo::Maddpg => "maddpg",
            Algo::Ddpg => "ddpg",
            Algo::VanillaAc => "ac",
            Algo::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "maddpg" => Ok(Algo::Maddpg),
            "ddpg" => Ok(Algo::Ddpg),
            "ac" => Ok(Algo::VanillaAc),
            "random" => Ok(Algo::Random),
            other => Err(CaraError::InvalidArgument(format!(
                "unknown algorithm tag `{other}` (expected maddpg|ddpg|ac|random)"
            ))),
        }
    }
}

/// Trainer hyperparameters. Defaults are the full-scale table values.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig<S> {
    pub episodes: usize,
    pub steps: usize,
    pub minibatch: usize,
    pub gamma: S,
    pub tau: S,
    pub noise_initial: S,
    pub noise_final: S,
    pub noise_decay_episodes: usize,
    pub learning_rate: S,
    pub buffer_capacity: usize,
    pub seed: u64,
}

impl<S: Scalar> Default for TrainerConfig<S> {
    fn default() -> Self {
        TrainerConfig {
            episodes: 500,
            steps: 100,
            minibatch: 64,
            gamma: S::c(0.95),
            tau: S::c(0.01),
            noise_initial: S::c(0.9),
            noise_final: S::c(0.05),
            noise_decay_episodes: 400,
            learning_rate: S::c(0.05),
            buffer_capacity: 1000,
            seed: 1,
        }
    }
}

impl<S: Scalar> TrainerConfig<S> {
    /// Exploration noise scale for an episode index.
    pub fn noise_scale(&self, episode: usize) -> S {
        if self.noise_decay_episodes == 0 || episode >= self.noise_decay_episodes {
            return self.noise_final;
        }
        let frac = S::c(episode as f64 / self.noise_decay_episodes as f64);
        self.noise_initial + (self.noise_final - self.noise_initial) * frac
    }
}

/// All agents of one run plus their learning storage.
#[derive(Debug, Clone)]
pub enum AgentBank<S> {
    Maddpg {
        agents: Vec<AgentPack<S>>,
        buffer: ReplayBuffer<S>,
    },
    Ddpg {
        agents: Vec<DdpgAgent<S>>,
        buffer: ReplayBuffer<S>,
    },
    VanillaAc {
        agents: Vec<VanillaAcAgent<S>>,
    },
    Random {
        agent_count: usize,
        action_len: usize,
    },
}

impl<S: Scalar> AgentBank<S> {
    /// Builds the bank for `algo` over `agent_count` agents.
    pub fn build(
        algo: Algo,
        agent_count: usize,
        action_len: usize,
        cfg: &TrainerConfig<S>,
    ) -> Result<Self> {
        if agent_count == 0 {
            return Err(CaraError::InvalidArgument("need at least one agent".into()));
        }
        let obs_len = OBS_DIM * agent_count;
        match algo {
            Algo::Maddpg => Ok(AgentBank::Maddpg {
                agents: (0..agent_count)
                    .map(|i| maddpg_agent(agent_count, action_len, cfg.learning_rate, cfg.seed, i))
                    .collect::<Result<_>>()?,
                buffer: ReplayBuffer::new(cfg.buffer_capacity, obs_len, agent_count, action_len)?,
            }),
            Algo::Ddpg => Ok(AgentBank::Ddpg {
                agents: (0..agent_count)
                    .map(|i| ddpg_agent(action_len, cfg.learning_rate, cfg.seed, i))
                    .collect::<Result<_>>()?,
                buffer: ReplayBuffer::new(cfg.buffer_capacity, obs_len, agent_count, action_len)?,
            }),
            Algo::VanillaAc => Ok(AgentBank::VanillaAc {
                agents: (0..agent_count)
                    .map(|i| ac_agent(action_len, cfg.learning_rate, cfg.seed, i))
                    .collect::<Result<_>>()?,
            }),
            Algo::Random => Ok(AgentBank::Random {
                agent_count,
                action_len,
            }),
        }
    }

    pub fn algo(&self) -> Algo {
        match self {
            AgentBank::Maddpg { .. } => Algo::Maddpg,
            AgentBank::Ddpg { .. } => Algo::Ddpg,
            AgentBank::VanillaAc { .. } => Algo::VanillaAc,
            AgentBank::Random { .. } => Algo::Random,
        }
    }

    pub fn agent_count(&self) -> usize {
        match self {
            AgentBank::Maddpg { agents, .. } => agents.len(),
            AgentBank::Ddpg { agents, .. } => agents.len(),
            AgentBank::VanillaAc { agents } => agents.len(),
            AgentBank::Random { agent_count, .. } => *agent_count,
        }
    }

    pub fn action_len(&self) -> usize {
        match self {
            AgentBank::Maddpg { agents, .. } => agents[0].actor.output_dim(),
            AgentBank::Ddpg { agents, .. } => agents[0].pack.actor.output_dim(),
            AgentBank::VanillaAc { agents } => agents[0].actor.output_dim(),
            AgentBank::Random { action_len, .. } => *action_len,
        }
    }

    /// Per-agent actions for the flattened joint observation.
    fn act(&self, x: &[S], noise_scale: S, rngs: &mut [ChaCha8Rng]) -> Result<Vec<Vec<S>>> {
        let n = self.agent_count();
        let mut actions = Vec::with_capacity(n);
        for i in 0..n {
            let obs = &x[OBS_DIM * i..OBS_DIM * (i + 1)];
            let a = match self {
                AgentBank::Maddpg { agents, .. } => {
                    select_action(&agents[i].actor, obs, noise_scale, &mut rngs[i])?
                }
                AgentBank::Ddpg { agents, .. } => {
                    select_action(&agents[i].pack.actor, obs, noise_scale, &mut rngs[i])?
                }
                AgentBank::VanillaAc { agents } => {
                    ac_select_action(&agents[i], obs, &mut rngs[i])?
                }
                AgentBank::Random { action_len, .. } => (0..*action_len)
                    .map(|_| S::c(rngs[i].gen::<f64>() * 2.0 - 1.0))
                    .collect(),
            };
            actions.push(a);
        }
        Ok(actions)
    }

    /// Consumes one transition: stores it and runs the per-step learning
    /// rules of the active algorithm.
    fn observe(
        &mut self,
        x: &[S],
        actions: Vec<Vec<S>>,
        rewards: &[S],
        x_next: &[S],
        minibatch: usize,
        gamma: S,
        sample_rngs: &mut [ChaCha8Rng],
    ) -> Result<()> {
        match self {
            AgentBank::Maddpg { agents, buffer } => {
                buffer.push(Transition {
                    joint_obs: x.to_vec(),
                    actions,
                    rewards: rewards.to_vec(),
                    next_obs: x_next.to_vec(),
                })?;
                if buffer.len() >= minibatch {
                    let n = agents.len();
                    for i in 0..n {
                        let batch = buffer.sample(minibatch, &mut sample_rngs[i])?;
                        let targets = critic_targets(agents, i, &batch, gamma)?;
                        critic_update(&mut agents[i], &batch, &targets)?;
                        actor_update(&mut agents[i], i, n, &batch)?;
                    }
                }
            }
            AgentBank::Ddpg { agents, buffer } => {
                buffer.push(Transition {
                    joint_obs: x.to_vec(),
                    actions,
                    rewards: rewards.to_vec(),
                    next_obs: x_next.to_vec(),
                })?;
                if buffer.len() >= minibatch {
                    for (i, agent) in agents.iter_mut().enumerate() {
                        let batch = buffer.sample(minibatch, &mut sample_rngs[i])?;
                        ddpg_update(agent, i, &batch, gamma)?;
                    }
                }
            }
            AgentBank::VanillaAc { agents } => {
                for (i, agent) in agents.iter_mut().enumerate() {
                    let obs = &x[OBS_DIM * i..OBS_DIM * (i + 1)];
                    let next = &x_next[OBS_DIM * i..OBS_DIM * (i + 1)];
                    ac_update(agent, obs, &actions[i], rewards[i], next, gamma)?;
                }
            }
            AgentBank::Random { .. } => {}
        }
        Ok(())
    }

    /// Per-episode soft sync; a no-op for the target-free algorithms.
    pub fn sync_targets(&mut self, tau: S) -> Result<()> {
        match self {
            AgentBank::Maddpg { agents, .. } => sync_targets(agents, tau),
            AgentBank::Ddpg { agents, .. } => {
                for a in agents.iter_mut() {
                    ddpg_sync_targets(a, tau)?;
                }
                Ok(())
            }
            AgentBank::VanillaAc { .. } | AgentBank::Random { .. } => Ok(()),
        }
    }
}

/// Per-episode aggregates handed to the metrics pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: usize,
    /// Sum of rewards over all agents and steps.
    pub total_reward: f64,
    /// Mean per-VUE downlink throughput in Mbps (over steps and agents).
    pub mean_throughput_mbps: f64,
    pub association_failures: u64,
    pub collisions: u64,
    pub wall_clock_s: f64,
}

/// Runs episodes `start_episode..cfg.episodes`, invoking `on_episode` after
/// each one (checkpoint cadence, CSV streaming). Returns the metrics series.
pub fn run_training_with<S, F>(
    env: &mut HetVNet<S>,
    bank: &mut AgentBank<S>,
    cfg: &TrainerConfig<S>,
    start_episode: usize,
    mut on_episode: F,
) -> Result<Vec<EpisodeMetrics>>
where
    S: Scalar,
    F: FnMut(&AgentBank<S>, &EpisodeMetrics) -> Result<()>,
{
    let n = env.vue_count();
    if bank.agent_count() != n {
        return Err(CaraError::Shape {
            context: "agent bank vs topology".into(),
            expected: n,
            actual: bank.agent_count(),
        });
    }
    if bank.action_len() != env.action_len() {
        return Err(CaraError::Shape {
            context: "action length vs topology".into(),
            expected: env.action_len(),
            actual: bank.action_len(),
        });
    }

    let mut series = Vec::with_capacity(cfg.episodes.saturating_sub(start_episode));
    for episode in start_episode..cfg.episodes {
        let t0 = Instant::now();
        let noise_scale = cfg.noise_scale(episode);
        let obs = env.reset(mix(&[cfg.seed, salt::EPISODE, episode as u64]));
        let mut x: Vec<S> = obs.flatten();

        let mut noise_rngs: Vec<ChaCha8Rng> = (0..n)
            .map(|i| stream(&[cfg.seed, salt::NOISE, i as u64, episode as u64]))
            .collect();
        let mut sample_rngs: Vec<ChaCha8Rng> = (0..n)
            .map(|i| stream(&[cfg.seed, salt::SAMPLE, i as u64, episode as u64]))
            .collect();

        let mut total_reward = 0.0;
        let mut throughput_sum = 0.0;
        let mut association_failures = 0u64;
        let mut collisions = 0u64;

        for step in 0..cfg.steps {
            let located = |e: CaraError| match e {
                CaraError::NonFinite(detail) => CaraError::NanAbort {
                    episode,
                    step,
                    detail,
                },
                other => other,
            };
            let actions = bank.act(&x, noise_scale, &mut noise_rngs).map_err(located)?;
            let outcome = env.step(&JointAction::new(actions.clone()))?;
            let x_next: Vec<S> = outcome.observations.flatten();

            total_reward += outcome.rewards.iter().map(|r| r.as_f64()).sum::<f64>();
            throughput_sum += outcome.throughputs.iter().map(|t| t.as_f64()).sum::<f64>();
            association_failures += outcome.grants.association_failures() as u64;
            collisions += outcome.grants.contested_channels as u64;

            bank.observe(
                &x,
                actions,
                &outcome.rewards,
                &x_next,
                cfg.minibatch,
                cfg.gamma,
                &mut sample_rngs,
            )
            .map_err(located)?;
            x = x_next;
        }
        bank.sync_targets(cfg.tau)?;

        let metrics = EpisodeMetrics {
            episode,
            total_reward,
            mean_throughput_mbps: throughput_sum / (cfg.steps as f64 * n as f64),
            association_failures,
            collisions,
            wall_clock_s: t0.elapsed().as_secs_f64(),
        };
        on_episode(bank, &metrics)?;
        series.push(metrics);
    }
    Ok(series)
}

/// Full run from episode zero without a callback.
pub fn run_training<S: Scalar>(
    env: &mut HetVNet<S>,
    bank: &mut AgentBank<S>,
    cfg: &TrainerConfig<S>,
) -> Result<Vec<EpisodeMetrics>> {
    run_training_with(env, bank, cfg, 0, |_, _| Ok(()))
}
