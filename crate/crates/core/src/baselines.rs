//! Comparison algorithms sharing the environment and network machinery:
//! decentralized DDPG (critics see only the owning agent's observation and
//! action) and a one-step vanilla actor-critic.

use rand::Rng;

use crate::error::{CaraError, Result};
use crate::maddpg::{
    actor_objective_gradient, clip_and_apply_ascent, critic_loss_gradient, critic_targets,
    maddpg_agent, select_action, AgentPack, GRAD_CLIP_NORM, HIDDEN, OBS_DIM, ROLE_ACTOR,
    ROLE_CRITIC,
};
use crate::nn::{clip_global_norm, soft_update, AdamState, MlpNet, OutputActivation};
use crate::replay::Transition;
use crate::rng::{mix, salt};
use crate::scalar::Scalar;

/// Fixed exploration standard deviation of the vanilla actor-critic's
/// Gaussian policy around the tanh mean.
pub const AC_EXPLORATION_STD: f64 = 0.1;

/// DDPG agent: the same four-net pack as MADDPG, except both critics take
/// only the agent's own observation and own action (input width
/// `2 + action_len`).
#[derive(Debug, Clone)]
pub struct DdpgAgent<S> {
    pub pack: AgentPack<S>,
}

/// Builds one decentralized DDPG agent. Uses the same per-role seed
/// derivation as `maddpg_agent`, so with a single agent the two algorithms
/// initialize identically.
pub fn ddpg_agent<S: Scalar>(
    action_len: usize,
    learning_rate: S,
    seed: u64,
    agent_index: usize,
) -> Result<DdpgAgent<S>> {
    // A MADDPG pack over a one-agent world has exactly the localized critic.
    let pack = maddpg_agent(1, action_len, learning_rate, seed, agent_index)?;
    debug_assert_eq!(pack.critic.input_dim(), OBS_DIM + action_len);
    Ok(DdpgAgent { pack })
}

impl<S: Scalar> DdpgAgent<S> {
    /// Structural invariant: the critic never reads other agents' data.
    pub fn critic_is_local(&self, action_len: usize) -> bool {
        self.pack.critic.input_dim() == OBS_DIM + action_len
    }
}

/// Extracts agent `i`'s local view of a joint transition.
fn localize<S: Scalar>(t: &Transition<S>, agent_index: usize) -> Transition<S> {
    let o = OBS_DIM * agent_index;
    Transition {
        joint_obs: t.joint_obs[o..o + OBS_DIM].to_vec(),
        actions: vec![t.actions[agent_index].clone()],
        rewards: vec![t.rewards[agent_index]],
        next_obs: t.next_obs[o..o + OBS_DIM].to_vec(),
    }
}

/// Localized bootstrap targets `y = r_i + gamma * Q'_i(o'_i, mu'_i(o'_i))`.
pub fn ddpg_targets<S: Scalar>(
    agent: &DdpgAgent<S>,
    agent_index: usize,
    batch: &[&Transition<S>],
    gamma: S,
) -> Result<Vec<S>> {
    let local: Vec<Transition<S>> = batch.iter().map(|t| localize(t, agent_index)).collect();
    let refs: Vec<&Transition<S>> = local.iter().collect();
    critic_targets(std::slice::from_ref(&agent.pack), 0, &refs, gamma)
}

/// One DDPG learning step from the agent's own minibatch view: a clipped
/// Adam critic step on the localized MSE, then a clipped Adam ascent step
/// through the localized chain. Returns `(critic loss, actor objective)`,
/// both measured before their updates. Target synchronization is a separate
/// per-episode step, `ddpg_sync_targets`, so the three algorithms share one
/// cadence.
pub fn ddpg_update<S: Scalar>(
    agent: &mut DdpgAgent<S>,
    agent_index: usize,
    batch: &[&Transition<S>],
    gamma: S,
) -> Result<(S, S)> {
    let local: Vec<Transition<S>> = batch.iter().map(|t| localize(t, agent_index)).collect();
    let refs: Vec<&Transition<S>> = local.iter().collect();

    let targets = critic_targets(std::slice::from_ref(&agent.pack), 0, &refs, gamma)?;
    let (loss, mut cgrads) = critic_loss_gradient(&agent.pack.critic, &refs, &targets)?;
    if !loss.is_finite() {
        return Err(CaraError::NonFinite("ddpg critic loss".into()));
    }
    clip_global_norm(&mut cgrads, S::c(GRAD_CLIP_NORM));
    agent.pack.critic_opt.apply(&mut agent.pack.critic, &cgrads)?;

    let (objective, agrads) =
        actor_objective_gradient(&agent.pack.actor, &agent.pack.critic, 0, OBS_DIM, &refs)?;
    if !objective.is_finite() {
        return Err(CaraError::NonFinite("ddpg actor objective".into()));
    }
    clip_and_apply_ascent(&mut agent.pack.actor, &mut agent.pack.actor_opt, agrads)?;
    Ok((loss, objective))
}

/// Per-episode soft sync of one DDPG agent's targets.
pub fn ddpg_sync_targets<S: Scalar>(agent: &mut DdpgAgent<S>, tau: S) -> Result<()> {
    soft_update(&mut agent.pack.actor_target, &agent.pack.actor, tau)?;
    soft_update(&mut agent.pack.critic_target, &agent.pack.critic, tau)
}

/// Vanilla one-step actor-critic: a tanh-headed actor and a state-value
/// network, no replay buffer, no target networks.
#[derive(Debug, Clone)]
pub struct VanillaAcAgent<S> {
    pub actor: MlpNet<S>,
    pub value: MlpNet<S>,
    pub actor_opt: AdamState<S>,
    pub value_opt: AdamState<S>,
}

pub fn ac_agent<S: Scalar>(
    action_len: usize,
    learning_rate: S,
    seed: u64,
    agent_index: usize,
) -> Result<VanillaAcAgent<S>> {
    let actor = MlpNet::init(
        &[OBS_DIM, HIDDEN[0], HIDDEN[1], action_len],
        OutputActivation::Tanh,
        mix(&[seed, salt::NET, agent_index as u64, ROLE_ACTOR]),
    )?;
    let value = MlpNet::init(
        &[OBS_DIM, HIDDEN[0], HIDDEN[1], 1],
        OutputActivation::Identity,
        mix(&[seed, salt::NET, agent_index as u64, ROLE_CRITIC]),
    )?;
    Ok(VanillaAcAgent {
        actor_opt: AdamState::new(&actor, learning_rate),
        value_opt: AdamState::new(&value, learning_rate),
        actor,
        value,
    })
}

/// Samples from the fixed-std Gaussian policy around the tanh mean.
pub fn ac_select_action<S: Scalar, R: Rng>(
    agent: &VanillaAcAgent<S>,
    obs: &[S],
    rng: &mut R,
) -> Result<Vec<S>> {
    select_action(&agent.actor, obs, S::c(AC_EXPLORATION_STD), rng)
}

/// One on-policy update from the freshest transition.
///
/// The advantage is `A = r + gamma*v(o') - v(o)` with the bootstrap target
/// frozen; the value net regresses toward that target, and the actor takes
/// one ascent step on `A * grad log N(a; mu(o), sigma)` evaluated at the
/// executed action. Returns `(value loss, advantage)`.
pub fn ac_update<S: Scalar>(
    agent: &mut VanillaAcAgent<S>,
    obs: &[S],
    action: &[S],
    reward: S,
    next_obs: &[S],
    gamma: S,
) -> Result<(S, S)> {
    let v_next = agent.value.forward(next_obs)?[0];
    let target = reward + gamma * v_next;
    let v = agent.value.forward(obs)?[0];
    let advantage = target - v;
    if !advantage.is_finite() {
        return Err(CaraError::NonFinite("actor-critic advantage".into()));
    }

    let value_loss = (v - target) * (v - target);
    let mut vgrads = agent.value.backward(obs, &[S::c(2.0) * (v - target)])?;
    clip_global_norm(&mut vgrads, S::c(GRAD_CLIP_NORM));
    agent.value_opt.apply(&mut agent.value, &vgrads)?;

    let mu = agent.actor.forward(obs)?;
    let sigma_sq = S::c(AC_EXPLORATION_STD * AC_EXPLORATION_STD);
    let upstream: Vec<S> = action
        .iter()
        .zip(mu.iter())
        .map(|(&a, &m)| advantage * (a - m) / sigma_sq)
        .collect();
    let agrads = agent.actor.backward(obs, &upstream)?;
    clip_and_apply_ascent(&mut agent.actor, &mut agent.actor_opt, agrads)?;
    Ok((value_loss, advantage))
}

#[cfg(test)]
mod tests;
