//! Checkpoint serialization.
//!
//! Network files carry a text header (magic, net name, algorithm tag, dims,
//! activation, array count) followed by named, length-prefixed arrays of
//! little-endian 64-bit floats. Optimizer accumulators ride along with the
//! behavior nets, so a save/load round trip is bit-exact.
//!
//! A checkpoint directory holds `config.echo` (the resolved configuration),
//! `rng.state` (base seed and next episode, from which every derived RNG
//! stream is reconstructed), `replay.bin` for the buffer-backed algorithms,
//! and one `agent_<i>/<net_name>.bin` file per network.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::baselines::{DdpgAgent, VanillaAcAgent};
use crate::config::ExperimentConfig;
use crate::error::{CaraError, Result};
use crate::maddpg::{AgentPack, OBS_DIM};
use crate::nn::{AdamState, DenseLayer, MlpNet, OutputActivation};
use crate::replay::{ReplayBuffer, Transition};
use crate::scalar::Scalar;
use crate::train::{Algo, TrainerConfig};

const NET_MAGIC: &str = "CARA-NET 1";
const REPLAY_MAGIC: &str = "CARA-REPLAY 1";
const RNG_MAGIC: &str = "CARA-RNG 1";

fn corrupt(path: &Path, what: impl std::fmt::Display) -> CaraError {
    CaraError::Checkpoint(format!("{}: {what}", path.display()))
}

// ---------------------------------------------------------------------------
// Named f64 arrays
// ---------------------------------------------------------------------------

fn push_array(out: &mut Vec<u8>, name: &str, data: impl Iterator<Item = f64>) {
    out.extend_from_slice(&(name.len() as u32).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    let start = out.len();
    out.extend_from_slice(&0u64.to_le_bytes());
    let mut count = 0u64;
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
        count += 1;
    }
    out[start..start + 8].copy_from_slice(&count.to_le_bytes());
}

struct ArrayReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> ArrayReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(corrupt(self.path, "truncated array section"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn next_array(&mut self) -> Result<(String, Vec<f64>)> {
        let name_len = u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(self.take(name_len)?)
            .map_err(|_| corrupt(self.path, "array name is not utf-8"))?
            .to_string();
        let count = u64::from_le_bytes(self.take(8)?.try_into().unwrap()) as usize;
        let raw = self.take(count * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok((name, data))
    }

    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

// ---------------------------------------------------------------------------
// Network files
// ---------------------------------------------------------------------------

fn adam_array_names(layer: usize) -> [String; 4] {
    [
        format!("adam.m.l{layer}.w"),
        format!("adam.v.l{layer}.w"),
        format!("adam.m.l{layer}.b"),
        format!("adam.v.l{layer}.b"),
    ]
}

/// Writes one network (and optionally its optimizer state) to `path`.
pub fn save_net<S: Scalar>(
    path: &Path,
    name: &str,
    algo: &str,
    net: &MlpNet<S>,
    adam: Option<&AdamState<S>>,
) -> Result<()> {
    let n_arrays = 2 * net.layers.len() + adam.map_or(0, |_| 4 * net.layers.len() + 1);
    let dims: Vec<String> = net.dims().iter().map(|d| d.to_string()).collect();
    let mut header = String::new();
    header.push_str(NET_MAGIC);
    header.push('\n');
    header.push_str(&format!("name {name}\n"));
    header.push_str(&format!("algo {algo}\n"));
    header.push_str(&format!("dims {}\n", dims.join(" ")));
    header.push_str(&format!("activation {}\n", net.output_activation.name()));
    header.push_str(&format!("arrays {n_arrays}\n"));
    header.push('\n');

    let mut body = Vec::new();
    for (l, layer) in net.layers.iter().enumerate() {
        push_array(&mut body, &format!("l{l}.w"), layer.weights.iter().map(|v| v.as_f64()));
        push_array(&mut body, &format!("l{l}.b"), layer.biases.iter().map(|v| v.as_f64()));
    }
    if let Some(state) = adam {
        for l in 0..net.layers.len() {
            let [mw, vw, mb, vb] = adam_array_names(l);
            push_array(&mut body, &mw, state.m_weights[l].iter().map(|v| v.as_f64()));
            push_array(&mut body, &vw, state.v_weights[l].iter().map(|v| v.as_f64()));
            push_array(&mut body, &mb, state.m_biases[l].iter().map(|v| v.as_f64()));
            push_array(&mut body, &vb, state.v_biases[l].iter().map(|v| v.as_f64()));
        }
        let meta = [
            state.step as f64,
            state.learning_rate.as_f64(),
            state.beta1.as_f64(),
            state.beta2.as_f64(),
            state.epsilon.as_f64(),
        ];
        push_array(&mut body, "adam.meta", meta.into_iter());
    }

    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut file = fs::File::create(path)?;
    file.write_all(header.as_bytes())?;
    file.write_all(&body)?;
    Ok(())
}

/// Reads a network file back: `(name, algo, net, optimizer state)`.
pub fn load_net<S: Scalar>(
    path: &Path,
) -> Result<(String, String, MlpNet<S>, Option<AdamState<S>>)> {
    let bytes = fs::read(path)?;
    // Header: text lines up to the first blank line.
    let mut pos = 0usize;
    let mut lines = Vec::new();
    loop {
        let rest = &bytes[pos..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| corrupt(path, "header never terminates"))?;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| corrupt(path, "header is not utf-8"))?;
        pos += nl + 1;
        if line.is_empty() {
            break;
        }
        lines.push(line.to_string());
    }
    if lines.first().map(String::as_str) != Some(NET_MAGIC) {
        return Err(corrupt(path, "bad magic (expected CARA-NET 1)"));
    }
    let field = |prefix: &str| -> Result<String> {
        lines
            .iter()
            .find_map(|l| l.strip_prefix(prefix).map(str::to_string))
            .ok_or_else(|| corrupt(path, format!("missing header field `{}`", prefix.trim())))
    };
    let name = field("name ")?;
    let algo = field("algo ")?;
    let dims: Vec<usize> = field("dims ")?
        .split_whitespace()
        .map(|d| d.parse::<usize>().map_err(|_| corrupt(path, "bad dims")))
        .collect::<Result<_>>()?;
    let activation = OutputActivation::parse(&field("activation ")?)
        .map_err(|e| corrupt(path, e))?;
    let n_arrays: usize = field("arrays ")?
        .parse()
        .map_err(|_| corrupt(path, "bad array count"))?;
    if dims.len() < 2 {
        return Err(corrupt(path, "dims must list at least two layers"));
    }

    let mut reader = ArrayReader {
        bytes: &bytes,
        pos,
        path,
    };
    let mut arrays = std::collections::HashMap::new();
    for _ in 0..n_arrays {
        let (name, data) = reader.next_array()?;
        arrays.insert(name, data);
    }
    if !reader.done() {
        return Err(corrupt(path, "trailing bytes after declared arrays"));
    }

    fn take<S: Scalar>(
        arrays: &mut std::collections::HashMap<String, Vec<f64>>,
        path: &Path,
        key: &str,
        expected: usize,
    ) -> Result<Vec<S>> {
        let data = arrays
            .remove(key)
            .ok_or_else(|| corrupt(path, format!("missing array `{key}`")))?;
        if data.len() != expected {
            return Err(CaraError::Shape {
                context: format!("{}: array `{key}`", path.display()),
                expected,
                actual: data.len(),
            });
        }
        Ok(data.into_iter().map(S::c).collect())
    }

    let mut layers = Vec::new();
    for (l, pair) in dims.windows(2).enumerate() {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        layers.push(DenseLayer {
            in_dim: fan_in,
            out_dim: fan_out,
            weights: take(&mut arrays, path, &format!("l{l}.w"), fan_in * fan_out)?,
            biases: take(&mut arrays, path, &format!("l{l}.b"), fan_out)?,
        });
    }
    let net = MlpNet {
        layers,
        output_activation: activation,
    };

    let adam = if arrays.contains_key("adam.meta") {
        let meta: Vec<S> = take(&mut arrays, path, "adam.meta", 5)?;
        let mut state = AdamState::new(&net, S::zero());
        state.step = meta[0].as_f64() as u64;
        state.learning_rate = meta[1];
        state.beta1 = meta[2];
        state.beta2 = meta[3];
        state.epsilon = meta[4];
        for (l, pair) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let [mw, vw, mb, vb] = adam_array_names(l);
            state.m_weights[l] = take(&mut arrays, path, &mw, fan_in * fan_out)?;
            state.v_weights[l] = take(&mut arrays, path, &vw, fan_in * fan_out)?;
            state.m_biases[l] = take(&mut arrays, path, &mb, fan_out)?;
            state.v_biases[l] = take(&mut arrays, path, &vb, fan_out)?;
        }
        Some(state)
    } else {
        None
    };
    Ok((name, algo, net, adam))
}

// ---------------------------------------------------------------------------
// Replay buffer file
// ---------------------------------------------------------------------------

fn save_replay<S: Scalar>(path: &Path, buffer: &ReplayBuffer<S>, obs_len: usize, n: usize, a_len: usize) -> Result<()> {
    let (items, next, pushes) = buffer.ring_state();
    let mut header = String::new();
    header.push_str(REPLAY_MAGIC);
    header.push('\n');
    header.push_str(&format!(
        "capacity {} len {} next {} pushes {} obs {} agents {} actions {}\n\n",
        buffer.capacity(),
        items.len(),
        next,
        pushes,
        obs_len,
        n,
        a_len
    ));
    let mut body = Vec::new();
    let flat = items.iter().flat_map(|t| {
        t.joint_obs
            .iter()
            .chain(t.actions.iter().flatten())
            .chain(t.rewards.iter())
            .chain(t.next_obs.iter())
            .map(|v| v.as_f64())
    });
    push_array(&mut body, "transitions", flat);
    let mut file = fs::File::create(path)?;
    file.write_all(header.as_bytes())?;
    file.write_all(&body)?;
    Ok(())
}

fn load_replay<S: Scalar>(path: &Path) -> Result<ReplayBuffer<S>> {
    let bytes = fs::read(path)?;
    let text_end = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| corrupt(path, "header never terminates"))?;
    let header = std::str::from_utf8(&bytes[..text_end])
        .map_err(|_| corrupt(path, "header is not utf-8"))?;
    let mut lines = header.lines();
    if lines.next() != Some(REPLAY_MAGIC) {
        return Err(corrupt(path, "bad magic (expected CARA-REPLAY 1)"));
    }
    let fields: Vec<&str> = lines
        .next()
        .ok_or_else(|| corrupt(path, "missing shape line"))?
        .split_whitespace()
        .collect();
    let lookup = |key: &str| -> Result<usize> {
        fields
            .iter()
            .position(|&f| f == key)
            .and_then(|i| fields.get(i + 1))
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| corrupt(path, format!("missing `{key}`")))
    };
    let capacity = lookup("capacity")?;
    let len = lookup("len")?;
    let next = lookup("next")?;
    let pushes = lookup("pushes")? as u64;
    let obs_len = lookup("obs")?;
    let n = lookup("agents")?;
    let a_len = lookup("actions")?;

    let mut reader = ArrayReader {
        bytes: &bytes,
        pos: text_end + 2,
        path,
    };
    let (aname, flat) = reader.next_array()?;
    if aname != "transitions" {
        return Err(corrupt(path, "expected `transitions` array"));
    }
    let stride = obs_len + n * a_len + n + obs_len;
    if flat.len() != len * stride {
        return Err(CaraError::Shape {
            context: format!("{}: transitions", path.display()),
            expected: len * stride,
            actual: flat.len(),
        });
    }
    let mut items = Vec::with_capacity(len);
    for chunk in flat.chunks_exact(stride) {
        let mut it = chunk.iter().copied().map(S::c);
        let joint_obs: Vec<S> = it.by_ref().take(obs_len).collect();
        let actions: Vec<Vec<S>> = (0..n).map(|_| it.by_ref().take(a_len).collect()).collect();
        let rewards: Vec<S> = it.by_ref().take(n).collect();
        let next_obs: Vec<S> = it.by_ref().take(obs_len).collect();
        items.push(Transition {
            joint_obs,
            actions,
            rewards,
            next_obs,
        });
    }
    ReplayBuffer::from_ring_state(capacity, obs_len, n, a_len, items, next, pushes)
}

// ---------------------------------------------------------------------------
// Checkpoint directories
// ---------------------------------------------------------------------------

use crate::train::AgentBank;

const ACTOR_BEHAVIOR: &str = "actor_behavior";
const ACTOR_TARGET: &str = "actor_target";
const CRITIC_BEHAVIOR: &str = "critic_behavior";
const CRITIC_TARGET: &str = "critic_target";
const VALUE_NET: &str = "value";

fn agent_dir(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("agent_{i}"))
}

/// Writes a full training checkpoint under `dir`.
pub fn save_checkpoint<S: Scalar>(
    dir: &Path,
    cfg: &ExperimentConfig<S>,
    seed: u64,
    bank: &AgentBank<S>,
    next_episode: usize,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.echo"), cfg.echo())?;
    let algo = bank.algo().tag();
    fs::write(
        dir.join("rng.state"),
        format!("{RNG_MAGIC}\nseed = {seed}\nnext_episode = {next_episode}\nalgo = {algo}\n"),
    )?;

    let n = bank.agent_count();
    let a_len = bank.action_len();
    let obs_len = OBS_DIM * n;
    match bank {
        AgentBank::Maddpg { agents, buffer } => {
            save_replay(&dir.join("replay.bin"), buffer, obs_len, n, a_len)?;
            for (i, pack) in agents.iter().enumerate() {
                let d = agent_dir(dir, i);
                save_net(&d.join(format!("{ACTOR_BEHAVIOR}.bin")), ACTOR_BEHAVIOR, algo, &pack.actor, Some(&pack.actor_opt))?;
                save_net(&d.join(format!("{ACTOR_TARGET}.bin")), ACTOR_TARGET, algo, &pack.actor_target, None)?;
                save_net(&d.join(format!("{CRITIC_BEHAVIOR}.bin")), CRITIC_BEHAVIOR, algo, &pack.critic, Some(&pack.critic_opt))?;
                save_net(&d.join(format!("{CRITIC_TARGET}.bin")), CRITIC_TARGET, algo, &pack.critic_target, None)?;
            }
        }
        AgentBank::Ddpg { agents, buffer } => {
            save_replay(&dir.join("replay.bin"), buffer, obs_len, n, a_len)?;
            for (i, agent) in agents.iter().enumerate() {
                let d = agent_dir(dir, i);
                let p = &agent.pack;
                save_net(&d.join(format!("{ACTOR_BEHAVIOR}.bin")), ACTOR_BEHAVIOR, algo, &p.actor, Some(&p.actor_opt))?;
                save_net(&d.join(format!("{ACTOR_TARGET}.bin")), ACTOR_TARGET, algo, &p.actor_target, None)?;
                save_net(&d.join(format!("{CRITIC_BEHAVIOR}.bin")), CRITIC_BEHAVIOR, algo, &p.critic, Some(&p.critic_opt))?;
                save_net(&d.join(format!("{CRITIC_TARGET}.bin")), CRITIC_TARGET, algo, &p.critic_target, None)?;
            }
        }
        AgentBank::VanillaAc { agents } => {
            for (i, agent) in agents.iter().enumerate() {
                let d = agent_dir(dir, i);
                save_net(&d.join(format!("{ACTOR_BEHAVIOR}.bin")), ACTOR_BEHAVIOR, algo, &agent.actor, Some(&agent.actor_opt))?;
                save_net(&d.join(format!("{VALUE_NET}.bin")), VALUE_NET, algo, &agent.value, Some(&agent.value_opt))?;
            }
        }
        AgentBank::Random { .. } => {}
    }
    Ok(())
}

fn expect_net<S: Scalar>(
    dir: &Path,
    file: &str,
    in_dim: usize,
    out_dim: usize,
    with_adam: bool,
) -> Result<(MlpNet<S>, Option<AdamState<S>>)> {
    let path = dir.join(format!("{file}.bin"));
    let (_, _, net, adam) = load_net::<S>(&path)?;
    if net.input_dim() != in_dim {
        return Err(CaraError::Shape {
            context: format!("{}: input width", path.display()),
            expected: in_dim,
            actual: net.input_dim(),
        });
    }
    if net.output_dim() != out_dim {
        return Err(CaraError::Shape {
            context: format!("{}: output width", path.display()),
            expected: out_dim,
            actual: net.output_dim(),
        });
    }
    if with_adam && adam.is_none() {
        return Err(corrupt(&path, "missing optimizer state"));
    }
    Ok((net, adam))
}

/// Loaded checkpoint: config, base seed, next episode, and the agent bank.
#[derive(Debug)]
pub struct Checkpoint<S> {
    pub config: ExperimentConfig<S>,
    pub seed: u64,
    pub next_episode: usize,
    pub bank: AgentBank<S>,
}

/// Restores a checkpoint directory written by [`save_checkpoint`].
pub fn load_checkpoint<S: Scalar>(dir: &Path) -> Result<Checkpoint<S>> {
    let config = ExperimentConfig::<S>::from_file(&dir.join("config.echo"))?;
    let rng_path = dir.join("rng.state");
    let rng_text = fs::read_to_string(&rng_path)?;
    let mut lines = rng_text.lines();
    if lines.next() != Some(RNG_MAGIC) {
        return Err(corrupt(&rng_path, "bad magic (expected CARA-RNG 1)"));
    }
    let mut seed = None;
    let mut next_episode = None;
    let mut algo = None;
    for line in lines {
        if let Some((k, v)) = line.split_once('=') {
            match k.trim() {
                "seed" => seed = v.trim().parse::<u64>().ok(),
                "next_episode" => next_episode = v.trim().parse::<usize>().ok(),
                "algo" => algo = Algo::parse(v.trim()).ok(),
                _ => {}
            }
        }
    }
    let seed = seed.ok_or_else(|| corrupt(&rng_path, "missing seed"))?;
    let next_episode = next_episode.ok_or_else(|| corrupt(&rng_path, "missing next_episode"))?;
    let algo = algo.ok_or_else(|| corrupt(&rng_path, "missing algo"))?;

    let t = &config.topology;
    let n = t.vue_count;
    let k = t.mabs_count + t.mibs_count + t.pbs_count;
    let a_len = k + 1 + t.shared_channels + t.mmwave_channels;
    let obs_len = OBS_DIM * n;
    let tr: &TrainerConfig<S> = &config.trainer;

    let bank = match algo {
        Algo::Maddpg => {
            let critic_in = obs_len + n * a_len;
            let mut agents = Vec::with_capacity(n);
            for i in 0..n {
                let d = agent_dir(dir, i);
                let (actor, actor_opt) = expect_net(&d, ACTOR_BEHAVIOR, OBS_DIM, a_len, true)?;
                let (actor_target, _) = expect_net(&d, ACTOR_TARGET, OBS_DIM, a_len, false)?;
                let (critic, critic_opt) = expect_net(&d, CRITIC_BEHAVIOR, critic_in, 1, true)?;
                let (critic_target, _) = expect_net(&d, CRITIC_TARGET, critic_in, 1, false)?;
                agents.push(AgentPack {
                    actor,
                    actor_target,
                    critic,
                    critic_target,
                    actor_opt: actor_opt.expect("checked"),
                    critic_opt: critic_opt.expect("checked"),
                });
            }
            let buffer = load_replay::<S>(&dir.join("replay.bin"))?;
            AgentBank::Maddpg { agents, buffer }
        }
        Algo::Ddpg => {
            let critic_in = OBS_DIM + a_len;
            let mut agents = Vec::with_capacity(n);
            for i in 0..n {
                let d = agent_dir(dir, i);
                let (actor, actor_opt) = expect_net(&d, ACTOR_BEHAVIOR, OBS_DIM, a_len, true)?;
                let (actor_target, _) = expect_net(&d, ACTOR_TARGET, OBS_DIM, a_len, false)?;
                let (critic, critic_opt) = expect_net(&d, CRITIC_BEHAVIOR, critic_in, 1, true)?;
                let (critic_target, _) = expect_net(&d, CRITIC_TARGET, critic_in, 1, false)?;
                agents.push(DdpgAgent {
                    pack: AgentPack {
                        actor,
                        actor_target,
                        critic,
                        critic_target,
                        actor_opt: actor_opt.expect("checked"),
                        critic_opt: critic_opt.expect("checked"),
                    },
                });
            }
            let buffer = load_replay::<S>(&dir.join("replay.bin"))?;
            AgentBank::Ddpg { agents, buffer }
        }
        Algo::VanillaAc => {
            let mut agents = Vec::with_capacity(n);
            for i in 0..n {
                let d = agent_dir(dir, i);
                let (actor, actor_opt) = expect_net(&d, ACTOR_BEHAVIOR, OBS_DIM, a_len, true)?;
                let (value, value_opt) = expect_net(&d, VALUE_NET, OBS_DIM, 1, true)?;
                agents.push(VanillaAcAgent {
                    actor,
                    value,
                    actor_opt: actor_opt.expect("checked"),
                    value_opt: value_opt.expect("checked"),
                });
            }
            AgentBank::VanillaAc { agents }
        }
        Algo::Random => AgentBank::Random {
            agent_count: n,
            action_len: a_len,
        },
    };
    let _ = tr;
    Ok(Checkpoint {
        config,
        seed,
        next_episode,
        bank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::TrainerConfig;
    use tempfile::tempdir;

    #[test]
    fn net_round_trip_is_bit_exact() {
        let net = MlpNet::<f64>::init(&[3, 8, 4, 2], OutputActivation::Tanh, 42).unwrap();
        let mut adam = AdamState::new(&net, 0.05);
        adam.step = 17;
        for (i, m) in adam.m_weights.iter_mut().flatten().enumerate() {
            *m = (i as f64 * 0.123).sin();
        }
        let dir = tempdir().unwrap();
        let path = dir.path().join("net.bin");
        save_net(&path, "actor_behavior", "maddpg", &net, Some(&adam)).unwrap();
        let (name, algo, loaded, loaded_adam) = load_net::<f64>(&path).unwrap();
        assert_eq!(name, "actor_behavior");
        assert_eq!(algo, "maddpg");
        assert_eq!(loaded, net);
        assert_eq!(loaded_adam.unwrap(), adam);
    }

    #[test]
    fn f32_nets_round_trip_exactly_too() {
        let net = MlpNet::<f32>::init(&[2, 4, 1], OutputActivation::Identity, 5).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("net32.bin");
        save_net(&path, "value", "ac", &net, None).unwrap();
        let (_, _, loaded, _) = load_net::<f32>(&path).unwrap();
        assert_eq!(loaded, net);
    }

    #[test]
    fn corrupt_header_is_reported() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"NOT-A-NET\n\n").unwrap();
        let err = load_net::<f64>(&path).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");
    }

    #[test]
    fn checkpoint_round_trip_restores_the_bank() {
        let cfg = {
            let mut c = ExperimentConfig::<f64>::desk();
            c.trainer.buffer_capacity = 32;
            c.trainer.minibatch = 8;
            c
        };
        let t = &cfg.topology;
        let n = t.vue_count;
        let a_len = t.mabs_count + t.mibs_count + t.pbs_count + 1 + t.shared_channels + t.mmwave_channels;
        let tr = TrainerConfig::<f64> {
            seed: 9,
            ..cfg.trainer.clone()
        };
        let mut bank = AgentBank::build(Algo::Maddpg, n, a_len, &tr).unwrap();
        // Leave some buffer contents behind.
        if let AgentBank::Maddpg { buffer, .. } = &mut bank {
            for i in 0..5 {
                buffer
                    .push(Transition {
                        joint_obs: vec![0.0; 2 * n],
                        actions: vec![vec![0.1 * i as f64; a_len]; n],
                        rewards: vec![i as f64; n],
                        next_obs: vec![1.0; 2 * n],
                    })
                    .unwrap();
            }
        }
        let dir = tempdir().unwrap();
        save_checkpoint(dir.path(), &cfg, 9, &bank, 12).unwrap();
        let loaded = load_checkpoint::<f64>(dir.path()).unwrap();
        assert_eq!(loaded.seed, 9);
        assert_eq!(loaded.next_episode, 12);
        assert_eq!(loaded.config, cfg);
        match (&bank, &loaded.bank) {
            (
                AgentBank::Maddpg { agents: a, buffer: ba },
                AgentBank::Maddpg { agents: b, buffer: bb },
            ) => {
                for (x, y) in a.iter().zip(b.iter()) {
                    assert_eq!(x.actor, y.actor);
                    assert_eq!(x.actor_target, y.actor_target);
                    assert_eq!(x.critic, y.critic);
                    assert_eq!(x.critic_target, y.critic_target);
                    assert_eq!(x.actor_opt, y.actor_opt);
                    assert_eq!(x.critic_opt, y.critic_opt);
                }
                let (ia, na, pa) = ba.ring_state();
                let (ib, nb, pb) = bb.ring_state();
                assert_eq!(ia, ib);
                assert_eq!(na, nb);
                assert_eq!(pa, pb);
            }
            _ => panic!("bank variant changed"),
        }
    }

    #[test]
    fn mismatched_width_is_a_shape_error() {
        // Checkpoint a 4-VUE desk bank, then doctor the config echo to claim
        // 5 VUEs: the load must fail naming the widths.
        let cfg = ExperimentConfig::<f64>::desk();
        let t = &cfg.topology;
        let n = t.vue_count;
        let a_len = t.mabs_count + t.mibs_count + t.pbs_count + 1 + t.shared_channels + t.mmwave_channels;
        let tr = TrainerConfig::<f64> {
            seed: 4,
            ..cfg.trainer.clone()
        };
        let bank = AgentBank::build(Algo::Maddpg, n, a_len, &tr).unwrap();
        let dir = tempdir().unwrap();
        save_checkpoint(dir.path(), &cfg, 4, &bank, 0).unwrap();

        let echo_path = dir.path().join("config.echo");
        let doctored = std::fs::read_to_string(&echo_path)
            .unwrap()
            .replace("topology.vue_count = 4", "topology.vue_count = 5");
        std::fs::write(&echo_path, doctored).unwrap();

        let err = load_checkpoint::<f64>(dir.path()).unwrap_err();
        match err {
            CaraError::Shape { expected, actual, .. } => {
                assert_ne!(expected, actual);
            }
            other => panic!("expected shape error, got {other}"),
        }
    }
}
