//! Brute-force environment oracle shared by the oracle-equivalence test and
//! the acceptance suite.
//!
//! The oracle re-derives every step outcome from first principles and stays
//! independent of the simulator's code paths: station selection enumerates
//! all slots for a strict maximum, channel requests enumerate every subset
//! of the pool (size-capped, positive preferences) and keep the one with
//! the largest preference sum, and the pricing chain is written directly
//! from the dB-domain formulas in station/channel index order.

use cara_core::env::{GrantTable, HetVNet, JointAction, Pool, Station, Tier, Topology};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct OracleOutcome {
    pub stations: Vec<Option<usize>>,
    pub channels: Vec<Vec<usize>>,
    pub association_failed: Vec<bool>,
    pub spectrum_failed: Vec<bool>,
    pub contested: usize,
    pub rewards: Vec<f64>,
    pub throughputs: Vec<f64>,
    pub obs: Vec<(u8, u8)>,
}

fn gain(st: &Station<f64>, pos: [f64; 2]) -> f64 {
    let dx = st.position[0] - pos[0];
    let dy = st.position[1] - pos[1];
    let d = (dx * dx + dy * dy).sqrt().max(1.0);
    let pl = st.pathloss_a + st.pathloss_b * d.log10();
    10f64.powf(-pl / 10.0)
}

fn power_mw(st: &Station<f64>) -> f64 {
    10f64.powf(st.tx_power_dbm / 10.0)
}

/// Unique-argmax over a slice; panics on ties (callers only feed
/// unambiguous vectors).
fn strict_argmax(block: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in block.iter().enumerate() {
        if v > block[best] {
            best = i;
        }
    }
    assert!(
        block.iter().enumerate().all(|(i, &v)| i == best || v < block[best]),
        "ambiguous argmax in oracle input"
    );
    best
}

/// Best channel subset by exhaustive enumeration: all-positive preferences,
/// at most `cap` channels, maximum preference sum.
fn best_subset(prefs: &[f64], cap: usize) -> Vec<usize> {
    let m = prefs.len();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 0u32..(1 << m) {
        let subset: Vec<usize> = (0..m).filter(|&c| mask & (1 << c) != 0).collect();
        if subset.len() > cap || subset.iter().any(|&c| prefs[c] <= 0.0) {
            continue;
        }
        let sum: f64 = subset.iter().map(|&c| prefs[c]).sum();
        match &best {
            Some((s, _)) if *s >= sum => {}
            _ => best = Some((sum, subset)),
        }
    }
    best.expect("empty subset always qualifies").1
}

/// One full environment step computed from scratch.
pub fn oracle_step(
    topo: &Topology<f64>,
    positions: &[[f64; 2]],
    actions: &JointAction<f64>,
    prev_throughput: &mut [f64],
) -> OracleOutcome {
    let n = positions.len();
    let k = topo.stations.len();

    // Decode: per-VUE station choice and requested channel set.
    let mut stations: Vec<Option<usize>> = Vec::with_capacity(n);
    let mut requests: Vec<Vec<usize>> = Vec::with_capacity(n);
    for (i, a) in actions.per_vue.iter().enumerate() {
        let choice = strict_argmax(&a[..k + 1]);
        if choice == k {
            stations.push(None);
            requests.push(Vec::new());
            continue;
        }
        let st = &topo.stations[choice];
        let dx = st.position[0] - positions[i][0];
        let dy = st.position[1] - positions[i][1];
        if (dx * dx + dy * dy).sqrt() > st.radius {
            stations.push(None);
            requests.push(Vec::new());
            continue;
        }
        let prefs = match st.pool() {
            Pool::Shared => &a[k + 1..k + 1 + topo.shared_channels],
            Pool::MmWave => &a[k + 1 + topo.shared_channels..],
        };
        stations.push(Some(choice));
        requests.push(best_subset(prefs, topo.max_channels));
    }

    // Contention: a same-station channel wanted twice goes to nobody.
    let mut channels: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let mine: Vec<usize> = requests[i]
            .iter()
            .copied()
            .filter(|&c| {
                !(0..n).any(|j| j != i && stations[j] == stations[i] && requests[j].contains(&c))
            })
            .collect();
        channels.push(if stations[i].is_some() { mine } else { Vec::new() });
    }
    let mut contested = 0;
    for st in 0..k {
        let pool = match topo.stations[st].pool() {
            Pool::Shared => topo.shared_channels,
            Pool::MmWave => topo.mmwave_channels,
        };
        for c in 0..pool {
            let wanters = (0..n)
                .filter(|&i| stations[i] == Some(st) && requests[i].contains(&c))
                .count();
            if wanters >= 2 {
                contested += 1;
            }
        }
    }

    let association_failed: Vec<bool> = stations.iter().map(|s| s.is_none()).collect();
    let spectrum_failed: Vec<bool> = (0..n)
        .map(|i| stations[i].is_some() && channels[i].is_empty())
        .collect();

    // Pricing, in strict station/channel index order.
    let sinr_of = |vue: usize, channel: usize| -> f64 {
        let serving = stations[vue].unwrap();
        let st = &topo.stations[serving];
        let signal = gain(st, positions[vue]) * power_mw(st);
        let mut interference = 0.0;
        for (idx, other) in topo.stations.iter().enumerate() {
            if idx == serving || other.pool() != st.pool() {
                continue;
            }
            let transmitting =
                (0..n).any(|j| stations[j] == Some(idx) && channels[j].contains(&channel));
            if transmitting {
                interference += gain(other, positions[vue]) * power_mw(other);
            }
        }
        let noise = st.bandwidth_hz * 10f64.powf(topo.noise_density_dbm_hz / 10.0);
        signal / (interference + noise)
    };

    let mut rewards = Vec::with_capacity(n);
    let mut throughputs = Vec::with_capacity(n);
    let mut obs = Vec::with_capacity(n);
    for i in 0..n {
        let mut zeta = 0.0;
        let mut sinr_sum = 0.0;
        if let Some(serving) = stations[i] {
            let w = topo.stations[serving].bandwidth_hz;
            for &c in &channels[i] {
                let s = sinr_of(i, c);
                zeta += w * (1.0 + s).log2() / 1e6;
                sinr_sum += s;
            }
        }
        let mut kappa_level = 0.0;
        if let Some(serving) = stations[i] {
            for _ in &channels[i] {
                kappa_level += topo.stations[serving].tx_power_dbm;
            }
        }
        let kappa = topo.rho * kappa_level;
        let revenue = topo.eta * zeta - kappa;
        let reward = if association_failed[i] || spectrum_failed[i] {
            revenue - topo.upsilon
        } else {
            revenue
        };
        let s_qos = if !channels[i].is_empty() && 10.0 * sinr_sum.log10() >= topo.qos_threshold_db
        {
            1
        } else {
            0
        };
        let s_dl = if zeta > prev_throughput[i] { 1 } else { 0 };
        prev_throughput[i] = zeta;
        rewards.push(reward);
        throughputs.push(zeta);
        obs.push((s_qos, s_dl));
    }

    OracleOutcome {
        stations,
        channels,
        association_failed,
        spectrum_failed,
        contested,
        rewards,
        throughputs,
        obs,
    }
}

/// Draws a joint preference vector with unambiguous argmax and ranking:
/// pairwise-distinct station preferences and pairwise-distinct nonzero
/// channel preferences.
pub fn unambiguous_actions(
    n: usize,
    k: usize,
    shared: usize,
    mmwave: usize,
    rng: &mut ChaCha8Rng,
) -> JointAction<f64> {
    let distinct = |v: &[f64]| -> bool {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s.windows(2).all(|w| w[0] != w[1])
    };
    let per_vue = (0..n)
        .map(|_| loop {
            let a: Vec<f64> = (0..k + 1 + shared + mmwave)
                .map(|_| rng.gen::<f64>() * 2.0 - 1.0)
                .collect();
            let ok = distinct(&a[..k + 1])
                && distinct(&a[k + 1..k + 1 + shared])
                && distinct(&a[k + 1 + shared..])
                && a[k + 1..].iter().all(|&v| v != 0.0);
            if ok {
                break a;
            }
        })
        .collect();
    JointAction::new(per_vue)
}

fn station(tier: Tier, position: [f64; 2], radius: f64, power: f64) -> Station<f64> {
    let (bandwidth_hz, pathloss_a, pathloss_b) = match tier {
        Tier::Pico => (800e6, 37.0, 30.0),
        _ => (180e3, 34.0, 40.0),
    };
    Station {
        tier,
        position,
        radius,
        tx_power_dbm: power,
        bandwidth_hz,
        pathloss_a,
        pathloss_b,
    }
}

/// Fixed oracle suite: small 1+1+1 deployments covering pool sizes 1 and 2,
/// caps 1 and 2, 1 to 3 VUEs, tight and generous coverage radii.
pub fn suite() -> Vec<Topology<f64>> {
    let make = |n: usize,
                s: usize,
                p: usize,
                c_bar: usize,
                macro_r: f64,
                pico_r: f64|
     -> Topology<f64> {
        Topology {
            stations: vec![
                station(Tier::Macro, [0.0, 0.0], macro_r, 40.0),
                station(Tier::Micro, [40.0, 10.0], macro_r * 0.6, 35.0),
                station(Tier::Pico, [-25.0, 30.0], pico_r, 30.0),
            ],
            vues: vec![[1.0, 1.0]; n],
            shared_channels: s,
            mmwave_channels: p,
            max_channels: c_bar,
            qos_threshold_db: 7.0,
            noise_density_dbm_hz: -175.0,
            rho: 1e-3,
            eta: 1e-3,
            upsilon: 1e-2,
        }
    };
    vec![
        make(3, 2, 2, 2, 100.0, 200.0),
        make(2, 1, 2, 1, 100.0, 60.0),
        make(3, 2, 1, 2, 80.0, 25.0),
        make(1, 1, 1, 1, 120.0, 240.0),
        make(3, 1, 1, 1, 60.0, 10.0),
        make(2, 2, 2, 2, 150.0, 40.0),
    ]
}

/// Runs `vectors_per_topology` fuzzed joint actions against every suite
/// topology; returns `(vectors checked, mismatches)`.
pub fn run_equivalence(vectors_per_topology: usize, base_seed: u64) -> (usize, usize) {
    use rand::SeedableRng;
    let mut checked = 0;
    let mut mismatches = 0;
    for (ti, topo) in suite().into_iter().enumerate() {
        let n = topo.vues.len();
        let k = topo.stations.len();
        let (s, p) = (topo.shared_channels, topo.mmwave_channels);
        let mut env = HetVNet::new(topo.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed + ti as u64);
        let steps_per_episode = 3;
        let episodes = vectors_per_topology.div_ceil(steps_per_episode);
        'outer: for ep in 0..episodes {
            env.reset((base_seed << 8) ^ (ti as u64 * 1000 + ep as u64));
            let positions = env.vue_positions().to_vec();
            let mut oracle_prev = vec![0.0; n];
            for _ in 0..steps_per_episode {
                if checked == vectors_per_topology * (ti + 1) {
                    break 'outer;
                }
                let actions = unambiguous_actions(n, k, s, p, &mut rng);
                let outcome = env.step(&actions).unwrap();
                let oracle = oracle_step(&topo, &positions, &actions, &mut oracle_prev);
                checked += 1;
                if !outcomes_match(&outcome.grants, &oracle, &outcome) {
                    mismatches += 1;
                }
            }
        }
    }
    (checked, mismatches)
}

fn outcomes_match(
    grants: &GrantTable,
    oracle: &OracleOutcome,
    outcome: &cara_core::env::StepOutcome<f64>,
) -> bool {
    let n = grants.vues.len();
    if grants.contested_channels != oracle.contested {
        return false;
    }
    for i in 0..n {
        let g = &grants.vues[i];
        if g.station != oracle.stations[i]
            || g.channels != oracle.channels[i]
            || g.association_failed != oracle.association_failed[i]
            || g.spectrum_failed != oracle.spectrum_failed[i]
            || outcome.rewards[i] != oracle.rewards[i]
            || outcome.throughputs[i] != oracle.throughputs[i]
            || outcome.observations.pairs[i] != oracle.obs[i]
        {
            return false;
        }
    }
    true
}
