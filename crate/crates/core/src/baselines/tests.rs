use super::*;
use crate::maddpg::{actor_update, critic_update};
use approx::assert_relative_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const A: usize = 3;

fn joint_batch(n: usize, count: usize, seed: u64) -> Vec<Transition<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: u64 = rng.gen();
            let y: u64 = rng.gen();
            Transition {
                joint_obs: (0..2 * n as u64).map(|i| ((x >> i) & 1) as f64).collect(),
                actions: (0..n)
                    .map(|_| (0..A).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
                    .collect(),
                rewards: (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect(),
                next_obs: (0..2 * n as u64).map(|i| ((y >> i) & 1) as f64).collect(),
            }
        })
        .collect()
}

#[test]
fn ddpg_critic_is_structurally_local() {
    let agent = ddpg_agent::<f64>(A, 0.05, 3, 0).unwrap();
    assert!(agent.critic_is_local(A));
    assert_eq!(agent.pack.critic.input_dim(), 2 + A);
}

#[test]
fn ddpg_targets_with_zero_gamma_are_own_rewards() {
    let agent = ddpg_agent::<f64>(A, 0.05, 4, 1);
    let agent = agent.unwrap();
    let batch = joint_batch(3, 10, 5);
    let refs: Vec<&Transition<f64>> = batch.iter().collect();
    let y = ddpg_targets(&agent, 1, &refs, 0.0).unwrap();
    let r: Vec<f64> = batch.iter().map(|t| t.rewards[1]).collect();
    assert_eq!(y, r);
}

#[test]
fn single_agent_ddpg_equals_maddpg_updates_bitwise() {
    // With one agent the centralized critic degenerates to the local one:
    // identical seeds must produce identical parameter trajectories.
    let seed = 42;
    let mut maddpg = crate::maddpg::maddpg_agent::<f64>(1, A, 0.05, seed, 0).unwrap();
    let mut ddpg = ddpg_agent::<f64>(A, 0.05, seed, 0).unwrap();
    assert_eq!(maddpg.actor, ddpg.pack.actor);
    assert_eq!(maddpg.critic, ddpg.pack.critic);

    let batch = joint_batch(1, 16, 6);
    let refs: Vec<&Transition<f64>> = batch.iter().collect();
    let gamma = 0.95;
    for _ in 0..3 {
        let packs = std::slice::from_ref(&maddpg);
        let y = critic_targets(packs, 0, &refs, gamma).unwrap();
        let loss_m = critic_update(&mut maddpg, &refs, &y).unwrap();
        let obj_m = actor_update(&mut maddpg, 0, 1, &refs).unwrap();
        let (loss_d, obj_d) = ddpg_update(&mut ddpg, 0, &refs, gamma).unwrap();
        assert_eq!(loss_m, loss_d);
        assert_eq!(obj_m, obj_d);
        assert_eq!(maddpg.critic, ddpg.pack.critic);
        assert_eq!(maddpg.actor, ddpg.pack.actor);
        assert_eq!(maddpg.critic_opt, ddpg.pack.critic_opt);
        assert_eq!(maddpg.actor_opt, ddpg.pack.actor_opt);
    }
    crate::maddpg::sync_targets(std::slice::from_mut(&mut maddpg), 0.01).unwrap();
    ddpg_sync_targets(&mut ddpg, 0.01).unwrap();
    assert_eq!(maddpg.critic_target, ddpg.pack.critic_target);
    assert_eq!(maddpg.actor_target, ddpg.pack.actor_target);
}

#[test]
fn ddpg_localized_actor_chain_matches_finite_differences() {
    let agent = ddpg_agent::<f64>(A, 0.05, 7, 0).unwrap();
    let batch = joint_batch(2, 6, 8);
    let local: Vec<Transition<f64>> = batch
        .iter()
        .map(|t| Transition {
            joint_obs: t.joint_obs[2..4].to_vec(),
            actions: vec![t.actions[1].clone()],
            rewards: vec![t.rewards[1]],
            next_obs: t.next_obs[2..4].to_vec(),
        })
        .collect();
    let refs: Vec<&Transition<f64>> = local.iter().collect();
    let (_, grads) =
        actor_objective_gradient(&agent.pack.actor, &agent.pack.critic, 0, 2, &refs).unwrap();

    let objective = |actor: &MlpNet<f64>| -> f64 {
        let mut total = 0.0;
        for t in &local {
            let mu = actor.forward(&t.joint_obs).unwrap();
            let mut input = t.joint_obs.clone();
            input.extend(mu);
            total += agent.pack.critic.forward(&input).unwrap()[0];
        }
        total / local.len() as f64
    };

    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..15 {
        let l = rng.gen_range(0..agent.pack.actor.layers.len());
        let k = rng.gen_range(0..agent.pack.actor.layers[l].weights.len());
        let mut plus = agent.pack.actor.clone();
        plus.layers[l].weights[k] += h;
        let mut minus = agent.pack.actor.clone();
        minus.layers[l].weights[k] -= h;
        let fd = (objective(&plus) - objective(&minus)) / (2.0 * h);
        assert_relative_eq!(grads.weights[l][k], fd, max_relative = 1e-4, epsilon = 1e-6);
    }
}

#[test]
fn ac_actor_is_unchanged_when_advantage_is_zero() {
    let mut agent = ac_agent::<f64>(A, 0.05, 10, 0).unwrap();
    let obs = [1.0, 0.0];
    let next = [0.0, 1.0];
    let gamma = 0.95;
    // Choose the reward so the TD target equals the current value exactly.
    let v = agent.value.forward(&obs).unwrap()[0];
    let v_next = agent.value.forward(&next).unwrap()[0];
    let reward = v - gamma * v_next;
    let action = vec![0.2; A];
    let before = agent.actor.clone();
    let (loss, advantage) = ac_update(&mut agent, &obs, &action, reward, &next, gamma).unwrap();
    assert_eq!(advantage, 0.0);
    assert_eq!(loss, 0.0);
    assert_eq!(agent.actor, before);
}

#[test]
fn ac_value_gradient_matches_finite_differences() {
    let agent = ac_agent::<f64>(A, 0.05, 11, 1).unwrap();
    let obs = [1.0, 1.0];
    let next = [0.0, 1.0];
    let gamma = 0.9;
    let reward = 0.4;

    // Frozen-target squared TD error and its analytic gradient.
    let v_next = agent.value.forward(&next).unwrap()[0];
    let target = reward + gamma * v_next;
    let v = agent.value.forward(&obs).unwrap()[0];
    let grads = agent.value.backward(&obs, &[2.0 * (v - target)]).unwrap();

    let td_sq = |value: &MlpNet<f64>| -> f64 {
        let v = value.forward(&obs).unwrap()[0];
        (v - target) * (v - target)
    };
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..15 {
        let l = rng.gen_range(0..agent.value.layers.len());
        let k = rng.gen_range(0..agent.value.layers[l].weights.len());
        let mut plus = agent.value.clone();
        plus.layers[l].weights[k] += h;
        let mut minus = agent.value.clone();
        minus.layers[l].weights[k] -= h;
        let fd = (td_sq(&plus) - td_sq(&minus)) / (2.0 * h);
        assert_relative_eq!(grads.weights[l][k], fd, max_relative = 1e-4, epsilon = 1e-6);
    }
}

#[test]
fn ac_value_converges_to_the_geometric_fixed_point() {
    // Constant reward on a frozen observation: v must approach r / (1 - gamma).
    let mut agent = ac_agent::<f64>(A, 0.005, 13, 0).unwrap();
    let obs = [1.0, 0.0];
    let gamma = 0.95;
    let reward = 0.05;
    let action = vec![0.0; A];
    for _ in 0..5000 {
        ac_update(&mut agent, &obs, &action, reward, &obs, gamma).unwrap();
    }
    let v = agent.value.forward(&obs).unwrap()[0];
    let fixed_point = reward / (1.0 - gamma);
    assert_relative_eq!(v, fixed_point, max_relative = 0.01);
}

#[test]
fn ac_select_action_is_bounded_and_seeded() {
    let agent = ac_agent::<f64>(A, 0.05, 14, 0).unwrap();
    let obs = [0.0, 0.0];
    let mut r1 = ChaCha8Rng::seed_from_u64(3);
    let mut r2 = ChaCha8Rng::seed_from_u64(3);
    let a1 = ac_select_action(&agent, &obs, &mut r1).unwrap();
    let a2 = ac_select_action(&agent, &obs, &mut r2).unwrap();
    assert_eq!(a1, a2);
    assert!(a1.iter().all(|&v| (-1.0..=1.0).contains(&v)));
    // Exploration actually perturbs the mean.
    assert_ne!(a1, agent.actor.forward(&obs).unwrap());
}
