//! MADDPG agents: decentralized tanh actors, centralized critics over the
//! joint observation and all agents' actions, target copies of both, and
//! the clipped-Adam update rules.
//!
//! The critic target and actor objective both bootstrap through pure
//! forward passes. Observations are bit pairs, so repeated forward passes
//! over the same bit pattern inside one update are served from a small
//! memo; the memo is bypassed whenever an observation is not an exact bit
//! vector, which keeps results identical to the direct computation.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CaraError, Result};
use crate::nn::{clip_global_norm, soft_update, AdamState, GradPack, MlpNet, OutputActivation, Scratch};
use crate::replay::Transition;
use crate::rng::{mix, salt};
use crate::scalar::Scalar;

/// Per-agent observation width: the (QoS, DL) bit pair.
pub const OBS_DIM: usize = 2;
/// Hidden layer widths shared by every network in the artifact.
pub const HIDDEN: [usize; 2] = [64, 32];
/// Global gradient-norm cap applied before every Adam step.
pub const GRAD_CLIP_NORM: f64 = 1.0;

/// Seed-derivation role tags, shared with the baselines so identically
/// seeded agents start from identical weights.
pub(crate) const ROLE_ACTOR: u64 = 0;
pub(crate) const ROLE_CRITIC: u64 = 1;

/// Negates an ascent-direction gradient, clips it, and applies one Adam
/// step. Shared by every actor update in the crate.
pub(crate) fn clip_and_apply_ascent<S: Scalar>(
    net: &mut MlpNet<S>,
    opt: &mut AdamState<S>,
    mut grads: GradPack<S>,
) -> Result<()> {
    grads.scale_params(-S::one());
    clip_global_norm(&mut grads, S::c(GRAD_CLIP_NORM));
    opt.apply(net, &grads)
}

/// One VUE's four networks plus optimizer state.
#[derive(Debug, Clone)]
pub struct AgentPack<S> {
    pub actor: MlpNet<S>,
    pub actor_target: MlpNet<S>,
    pub critic: MlpNet<S>,
    pub critic_target: MlpNet<S>,
    pub actor_opt: AdamState<S>,
    pub critic_opt: AdamState<S>,
}

/// Builds one MADDPG agent. The critic consumes the flattened joint
/// observation (2N) followed by every agent's action vector; targets start
/// as exact copies of the behavior nets.
pub fn maddpg_agent<S: Scalar>(
    n_agents: usize,
    action_len: usize,
    learning_rate: S,
    seed: u64,
    agent_index: usize,
) -> Result<AgentPack<S>> {
    let actor_dims = [OBS_DIM, HIDDEN[0], HIDDEN[1], action_len];
    let critic_in = OBS_DIM * n_agents + n_agents * action_len;
    let critic_dims = [critic_in, HIDDEN[0], HIDDEN[1], 1];
    let actor = MlpNet::init(
        &actor_dims,
        OutputActivation::Tanh,
        mix(&[seed, salt::NET, agent_index as u64, ROLE_ACTOR]),
    )?;
    let critic = MlpNet::init(
        &critic_dims,
        OutputActivation::Identity,
        mix(&[seed, salt::NET, agent_index as u64, ROLE_CRITIC]),
    )?;
    Ok(AgentPack {
        actor_target: actor.clone(),
        critic_target: critic.clone(),
        actor_opt: AdamState::new(&actor, learning_rate),
        critic_opt: AdamState::new(&critic, learning_rate),
        actor,
        critic,
    })
}

/// Deterministic policy action plus exploration noise.
///
/// Gaussian noise with standard deviation `noise_scale` is added per
/// component, then the result is clamped to [-1, 1]. With `noise_scale = 0`
/// the output is exactly the policy value.
pub fn select_action<S: Scalar, R: Rng>(
    actor: &MlpNet<S>,
    obs: &[S],
    noise_scale: S,
    rng: &mut R,
) -> Result<Vec<S>> {
    let mut action = actor.forward(obs)?;
    for a in action.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *a = (*a + noise_scale * S::c(z)).max(-S::one()).min(S::one());
    }
    Ok(action)
}

/// Bit-pattern key for memoizing forwards over observation vectors.
/// `None` when the vector is not an exact 0/1 pattern or too wide to key.
fn bit_key<S: Scalar>(obs: &[S]) -> Option<u128> {
    if obs.len() > 128 {
        return None;
    }
    let mut key = 0u128;
    for (i, &v) in obs.iter().enumerate() {
        if v == S::one() {
            key |= 1 << i;
        } else if v != S::zero() {
            return None;
        }
    }
    Some(key)
}

/// Concatenates the critic input `[x | a_1 .. a_N]` into `buf`.
pub fn critic_input<S: Scalar>(joint_obs: &[S], actions: &[Vec<S>], buf: &mut Vec<S>) {
    buf.clear();
    buf.extend_from_slice(joint_obs);
    for a in actions {
        buf.extend_from_slice(a);
    }
}

/// Bootstrapped critic targets for `agent_index` over a minibatch:
/// `y = r_i + gamma * Q'_i(x', mu'_1(o'_1), ..., mu'_N(o'_N))`.
///
/// Episodes truncate with bootstrapping; there is no terminal zeroing.
pub fn critic_targets<S: Scalar>(
    agents: &[AgentPack<S>],
    agent_index: usize,
    batch: &[&Transition<S>],
    gamma: S,
) -> Result<Vec<S>> {
    let n = agents.len();
    let me = &agents[agent_index];
    let mut memo: HashMap<u128, S> = HashMap::new();
    let mut input = Vec::new();
    let mut scratch = Scratch::new();
    let mut actor_scratch = Scratch::new();
    let mut targets = Vec::with_capacity(batch.len());

    for t in batch {
        let key = bit_key(&t.next_obs);
        let q_next = if let Some(k) = key {
            if let Some(&q) = memo.get(&k) {
                q
            } else {
                let q = bootstrap_q(me, agents, n, &t.next_obs, &mut input, &mut scratch, &mut actor_scratch)?;
                memo.insert(k, q);
                q
            }
        } else {
            bootstrap_q(me, agents, n, &t.next_obs, &mut input, &mut scratch, &mut actor_scratch)?
        };
        targets.push(t.rewards[agent_index] + gamma * q_next);
    }
    Ok(targets)
}

fn bootstrap_q<S: Scalar>(
    me: &AgentPack<S>,
    agents: &[AgentPack<S>],
    n: usize,
    next_obs: &[S],
    input: &mut Vec<S>,
    scratch: &mut Scratch<S>,
    actor_scratch: &mut Scratch<S>,
) -> Result<S> {
    input.clear();
    input.extend_from_slice(next_obs);
    for k in 0..n {
        let o_k = &next_obs[OBS_DIM * k..OBS_DIM * (k + 1)];
        agents[k].actor_target.forward_scratch(o_k, actor_scratch)?;
        input.extend_from_slice(actor_scratch.output());
    }
    me.critic_target.forward_scratch(input, scratch)?;
    Ok(scratch.output()[0])
}

/// Minibatch MSE loss of the behavior critic and its parameter gradients.
pub fn critic_loss_gradient<S: Scalar>(
    critic: &MlpNet<S>,
    batch: &[&Transition<S>],
    targets: &[S],
) -> Result<(S, GradPack<S>)> {
    if targets.len() != batch.len() {
        return Err(CaraError::Shape {
            context: "critic targets".into(),
            expected: batch.len(),
            actual: targets.len(),
        });
    }
    let v = batch.len();
    let inv = S::one() / S::c(v as f64);
    let mut grads = GradPack::zeros_like(critic);
    let mut scratch = Scratch::new();
    let mut input = Vec::new();
    let mut loss = S::zero();

    for (t, &y) in batch.iter().zip(targets.iter()) {
        critic_input(&t.joint_obs, &t.actions, &mut input);
        critic.forward_scratch(&input, &mut scratch)?;
        let q = scratch.output()[0];
        let diff = q - y;
        loss += diff * diff * inv;
        let upstream = [S::c(2.0) * diff * inv];
        critic.backprop_scratch(&upstream, &mut scratch, Some(&mut grads), None)?;
    }
    Ok((loss, grads))
}

/// One minibatch MSE step on the behavior critic; returns the loss before
/// the update.
pub fn critic_update<S: Scalar>(
    pack: &mut AgentPack<S>,
    batch: &[&Transition<S>],
    targets: &[S],
) -> Result<S> {
    let (loss, mut grads) = critic_loss_gradient(&pack.critic, batch, targets)?;
    if !loss.is_finite() {
        return Err(CaraError::NonFinite(format!(
            "critic loss over {} samples (first target {})",
            batch.len(),
            targets[0]
        )));
    }
    clip_global_norm(&mut grads, S::c(GRAD_CLIP_NORM));
    pack.critic_opt.apply(&mut pack.critic, &grads)?;
    Ok(loss)
}

/// Mean Q objective of the behavior actor of `agent_index` over a minibatch
/// and its (ascent-direction) parameter gradients.
///
/// Per sample the agent's stored action is replaced by `mu_i(o_i)`, the
/// critic is differentiated with respect to that action block only, and the
/// chain `grad_theta mu * grad_a Q` is accumulated; other agents' sampled
/// actions stay fixed. `action_offset` locates the agent's action block in
/// the critic input.
pub fn actor_objective_gradient<S: Scalar>(
    actor: &MlpNet<S>,
    critic: &MlpNet<S>,
    agent_index: usize,
    action_offset: usize,
    batch: &[&Transition<S>],
) -> Result<(S, GradPack<S>)> {
    let v = batch.len();
    let inv = S::one() / S::c(v as f64);
    let a_len = actor.output_dim();

    let mut grads = GradPack::zeros_like(actor);
    let mut critic_scratch = Scratch::new();
    let mut fresh_actor_scratch = Scratch::new();
    let mut actor_memo: HashMap<u128, Scratch<S>> = HashMap::new();
    let mut input = Vec::new();
    let mut action_grad = vec![S::zero(); a_len];
    let mut q_mean = S::zero();

    for t in batch {
        let o_i = &t.joint_obs[OBS_DIM * agent_index..OBS_DIM * (agent_index + 1)];

        // Actor forward, cached per distinct bit pattern; backward needs the
        // activations, so the whole scratch is cached.
        let actor_scratch: &mut Scratch<S> = match bit_key(o_i) {
            Some(k) => {
                if !actor_memo.contains_key(&k) {
                    let mut s = Scratch::new();
                    actor.forward_scratch(o_i, &mut s)?;
                    actor_memo.insert(k, s);
                }
                actor_memo.get_mut(&k).expect("just inserted")
            }
            None => {
                actor.forward_scratch(o_i, &mut fresh_actor_scratch)?;
                &mut fresh_actor_scratch
            }
        };

        critic_input(&t.joint_obs, &t.actions, &mut input);
        input[action_offset..action_offset + a_len].copy_from_slice(actor_scratch.output());
        critic.forward_scratch(&input, &mut critic_scratch)?;
        q_mean += critic_scratch.output()[0] * inv;

        action_grad.iter_mut().for_each(|g| *g = S::zero());
        critic.backprop_scratch(
            &[inv],
            &mut critic_scratch,
            None,
            Some((action_offset, &mut action_grad)),
        )?;
        actor.backprop_scratch(&action_grad, actor_scratch, Some(&mut grads), None)?;
    }
    Ok((q_mean, grads))
}

/// One sampled-policy-gradient ascent step on the behavior actor of
/// `agent_index`; returns the mean Q estimate before the update.
pub fn actor_update<S: Scalar>(
    pack: &mut AgentPack<S>,
    agent_index: usize,
    n_agents: usize,
    batch: &[&Transition<S>],
) -> Result<S> {
    let a_len = pack.actor.output_dim();
    let slot = OBS_DIM * n_agents + agent_index * a_len;
    let (q_mean, grads) =
        actor_objective_gradient(&pack.actor, &pack.critic, agent_index, slot, batch)?;
    if !q_mean.is_finite() {
        return Err(CaraError::NonFinite("actor objective".into()));
    }
    clip_and_apply_ascent(&mut pack.actor, &mut pack.actor_opt, grads)?;
    Ok(q_mean)
}

/// Soft-updates every agent's two target networks.
pub fn sync_targets<S: Scalar>(agents: &mut [AgentPack<S>], tau: S) -> Result<()> {
    for pack in agents.iter_mut() {
        soft_update(&mut pack.actor_target, &pack.actor, tau)?;
        soft_update(&mut pack.critic_target, &pack.critic, tau)?;
    }
    Ok(())
}
