//! The 3-tier HetVNet simulator.
//!
//! An environment step decodes every VUE's continuous preference vector into
//! an association/allocation grant table, resolves same-station channel
//! contention, then prices the result: per-channel SINR, Shannon throughput,
//! power cost, revenue, failure penalty, and the two observation bits.
//!
//! Physics conventions: powers in dBm convert to linear milliwatts, path
//! loss is `a + b*log10(d)` dB with d clamped to one meter, and the noise
//! floor of a link is `W * 10^(N0/10)` mW for the serving channel bandwidth.

mod grants;
mod topology;

pub use grants::{GrantTable, JointAction, JointObservation, StepOutcome, VueGrant};
pub use topology::{build_topology, Pool, Station, Tier, Topology, TopologyParams};

use rand::Rng;

use crate::error::{CaraError, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Shannon rate of one channel in Mbps.
pub fn channel_rate_mbps<S: Scalar>(bandwidth_hz: S, sinr_linear: S) -> S {
    bandwidth_hz * (S::one() + sinr_linear).log2() / S::c(1e6)
}

/// Simulation state: an immutable topology plus the per-episode VUE
/// positions and the previous-step throughput memory.
#[derive(Debug, Clone)]
pub struct HetVNet<S> {
    topology: Topology<S>,
    vue_positions: Vec<[S; 2]>,
    prev_throughput: Vec<S>,
    ready: bool,
}

impl<S: Scalar> HetVNet<S> {
    pub fn new(topology: Topology<S>) -> Result<Self> {
        topology.validate()?;
        let vue_positions = topology.vues.clone();
        let n = topology.vue_count();
        Ok(HetVNet {
            topology,
            vue_positions,
            prev_throughput: vec![S::zero(); n],
            ready: false,
        })
    }

    pub fn topology(&self) -> &Topology<S> {
        &self.topology
    }

    pub fn vue_count(&self) -> usize {
        self.topology.vue_count()
    }

    pub fn action_len(&self) -> usize {
        self.topology.action_len()
    }

    pub fn vue_positions(&self) -> &[[S; 2]] {
        &self.vue_positions
    }

    /// Starts an episode: redraws VUE positions uniformly in the macro disc
    /// from the episode seed, zeroes the throughput memory, and returns the
    /// all-zero initial observation.
    pub fn reset(&mut self, episode_seed: u64) -> JointObservation {
        let mut gen = rng::stream(&[episode_seed, rng::salt::EPISODE]);
        let radius = self.topology.stations[0].radius;
        for pos in self.vue_positions.iter_mut() {
            let r = radius * S::c(gen.gen::<f64>().sqrt());
            let theta = S::c(gen.gen::<f64>() * 2.0 * std::f64::consts::PI);
            *pos = [r * theta.cos(), r * theta.sin()];
        }
        for t in self.prev_throughput.iter_mut() {
            *t = S::zero();
        }
        self.ready = true;
        JointObservation::zeros(self.vue_count())
    }

    /// Overrides VUE positions (test fixages and oracle suites).
    pub fn set_vue_positions(&mut self, positions: Vec<[S; 2]>) -> Result<()> {
        if positions.len() != self.vue_count() {
            return Err(CaraError::Shape {
                context: "set_vue_positions".into(),
                expected: self.vue_count(),
                actual: positions.len(),
            });
        }
        self.vue_positions = positions;
        Ok(())
    }

    /// Decodes every VUE's preference vector and resolves contention.
    ///
    /// Per VUE: the argmax over the `K + 1` station block selects a station
    /// or the opt-out slot; an out-of-range or opted-out selection fails the
    /// association. Otherwise channel preferences of the matching pool are
    /// ranked and the strictly positive ones requested, at most `c̄`. A
    /// channel requested by two or more VUEs on the same station is granted
    /// to none of them; an associated VUE ending up with zero channels has
    /// its spectrum-access failure flag set.
    pub fn decode_and_resolve(&self, actions: &JointAction<S>) -> Result<GrantTable> {
        let n = self.vue_count();
        let a_len = self.action_len();
        if actions.per_vue.len() != n {
            return Err(CaraError::Shape {
                context: "joint action agent count".into(),
                expected: n,
                actual: actions.per_vue.len(),
            });
        }
        for (i, a) in actions.per_vue.iter().enumerate() {
            if a.len() != a_len {
                return Err(CaraError::Shape {
                    context: format!("action vector of VUE {i}"),
                    expected: a_len,
                    actual: a.len(),
                });
            }
            if !a.iter().all(|v| v.is_finite()) {
                return Err(CaraError::NonFinite(format!("action vector of VUE {i}")));
            }
        }

        let k = self.topology.station_count();
        let s_chans = self.topology.shared_channels;
        let c_bar = self.topology.max_channels;

        // Phase 1: independent per-VUE decode into (station, requested set).
        let mut requests: Vec<(Option<usize>, Vec<usize>)> = Vec::with_capacity(n);
        for (i, a) in actions.per_vue.iter().enumerate() {
            let station_block = &a[..k + 1];
            let mut best = 0usize;
            for (idx, &v) in station_block.iter().enumerate() {
                if v > station_block[best] {
                    best = idx;
                }
            }
            if best == k {
                // Explicit opt-out.
                requests.push((None, Vec::new()));
                continue;
            }
            let station = &self.topology.stations[best];
            if station.distance_to(self.vue_positions[i]) > station.radius {
                requests.push((None, Vec::new()));
                continue;
            }
            let pool_block = match station.pool() {
                Pool::Shared => &a[k + 1..k + 1 + s_chans],
                Pool::MmWave => &a[k + 1 + s_chans..],
            };
            let mut ranked: Vec<usize> = (0..pool_block.len()).collect();
            ranked.sort_by(|&x, &y| {
                pool_block[y].partial_cmp(&pool_block[x]).expect("finite prefs")
            });
            let wanted: Vec<usize> = ranked
                .into_iter()
                .filter(|&c| pool_block[c] > S::zero())
                .take(c_bar)
                .collect();
            requests.push((Some(best), wanted));
        }

        // Phase 2: same-station contention. A channel wanted by >= 2 VUEs of
        // one station goes to nobody.
        let mut contested_channels = 0usize;
        let mut vues = Vec::with_capacity(n);
        for (i, (station, wanted)) in requests.iter().enumerate() {
            match station {
                None => vues.push(VueGrant {
                    station: None,
                    channels: Vec::new(),
                    association_failed: true,
                    spectrum_failed: false,
                }),
                Some(st) => {
                    let mut granted: Vec<usize> = wanted
                        .iter()
                        .copied()
                        .filter(|&c| {
                            !requests.iter().enumerate().any(|(j, (st2, w2))| {
                                j != i && *st2 == Some(*st) && w2.contains(&c)
                            })
                        })
                        .collect();
                    granted.sort_unstable();
                    vues.push(VueGrant {
                        station: Some(*st),
                        channels: granted.clone(),
                        association_failed: false,
                        spectrum_failed: granted.is_empty(),
                    });
                }
            }
        }
        // Count each contested (station, channel) pair once.
        for st in 0..k {
            for c in 0..self.topology.pool_size(st) {
                let wanters = requests
                    .iter()
                    .filter(|(s, w)| *s == Some(st) && w.contains(&c))
                    .count();
                if wanters >= 2 {
                    contested_channels += 1;
                }
            }
        }

        Ok(GrantTable {
            vues,
            contested_channels,
        })
    }

    fn noise_mw(&self, bandwidth_hz: S) -> S {
        bandwidth_hz * S::c(10.0).powf(self.topology.noise_density_dbm_hz / S::c(10.0))
    }

    /// Linear SINR of `vue` on `channel` under `grants`.
    ///
    /// The numerator is the serving link's gain times per-channel transmit
    /// power; the denominator sums, in station order, every other station of
    /// the same pool group that granted the same channel to one of its VUEs,
    /// plus the thermal noise floor.
    pub fn sinr(&self, grants: &GrantTable, vue: usize, channel: usize) -> Result<S> {
        let serving = grants.vues[vue].station.ok_or_else(|| {
            CaraError::InvalidArgument(format!("VUE {vue} is not associated"))
        })?;
        if !grants.vues[vue].channels.contains(&channel) {
            return Err(CaraError::InvalidArgument(format!(
                "VUE {vue} does not hold channel {channel}"
            )));
        }
        let pos = self.vue_positions[vue];
        let serving_station = &self.topology.stations[serving];
        let signal = serving_station.link_gain(pos) * serving_station.tx_power_mw();

        let mut interference = S::zero();
        for (idx, station) in self.topology.stations.iter().enumerate() {
            if idx == serving || station.pool() != serving_station.pool() {
                continue;
            }
            let transmitting = grants
                .vues
                .iter()
                .any(|g| g.station == Some(idx) && g.channels.contains(&channel));
            if transmitting {
                interference += station.link_gain(pos) * station.tx_power_mw();
            }
        }
        let denom = interference + self.noise_mw(serving_station.bandwidth_hz);
        Ok(signal / denom)
    }

    /// Downlink throughput of `vue` in Mbps: the Shannon rate summed over
    /// granted channels, zero when nothing is granted.
    pub fn throughput_mbps(&self, grants: &GrantTable, vue: usize) -> Result<S> {
        let grant = &grants.vues[vue];
        let Some(serving) = grant.station else {
            return Ok(S::zero());
        };
        let w = self.topology.stations[serving].bandwidth_hz;
        let mut total = S::zero();
        for &c in &grant.channels {
            total += channel_rate_mbps(w, self.sinr(grants, vue, c)?);
        }
        Ok(total)
    }

    /// Power cost of `vue`: rho times the summed per-channel transmit power
    /// levels (dBm units) of the serving station; zero if unassociated.
    pub fn power_cost(&self, grants: &GrantTable, vue: usize) -> S {
        let grant = &grants.vues[vue];
        let Some(serving) = grant.station else {
            return S::zero();
        };
        let mut level_sum = S::zero();
        for _ in &grant.channels {
            level_sum += self.topology.stations[serving].tx_power_dbm;
        }
        self.topology.rho * level_sum
    }

    /// Revenue of `vue`: profit on throughput minus power cost.
    pub fn revenue(&self, grants: &GrantTable, vue: usize) -> Result<S> {
        let zeta = self.throughput_mbps(grants, vue)?;
        Ok(self.topology.eta * zeta - self.power_cost(grants, vue))
    }

    /// Executes one joint action: resolves grants, prices every VUE, updates
    /// the throughput memory and emits observations.
    ///
    /// Rewards decompose exactly as `R = eta*zeta - kappa - upsilon*fail`.
    /// The QoS bit is set iff the aggregate (linear-sum) SINR over granted
    /// channels reaches the dB threshold; the DL bit iff this step's
    /// throughput strictly beats the previous step's.
    pub fn step(&mut self, actions: &JointAction<S>) -> Result<StepOutcome<S>> {
        if !self.ready {
            return Err(CaraError::NotReset);
        }
        let grants = self.decode_and_resolve(actions)?;
        let n = self.vue_count();
        let mut rewards = Vec::with_capacity(n);
        let mut throughputs = Vec::with_capacity(n);
        let mut pairs = Vec::with_capacity(n);

        for i in 0..n {
            let zeta = self.throughput_mbps(&grants, i)?;
            let kappa = self.power_cost(&grants, i);
            let revenue = self.topology.eta * zeta - kappa;
            let reward = if grants.vues[i].failed() {
                revenue - self.topology.upsilon
            } else {
                revenue
            };

            let mut sinr_sum = S::zero();
            for &c in &grants.vues[i].channels {
                sinr_sum += self.sinr(&grants, i, c)?;
            }
            let s_qos = if !grants.vues[i].channels.is_empty()
                && S::c(10.0) * sinr_sum.log10() >= self.topology.qos_threshold_db
            {
                1
            } else {
                0
            };
            let s_dl = if zeta > self.prev_throughput[i] { 1 } else { 0 };
            self.prev_throughput[i] = zeta;

            rewards.push(reward);
            throughputs.push(zeta);
            pairs.push((s_qos, s_dl));
        }

        Ok(StepOutcome {
            observations: JointObservation { pairs },
            rewards,
            throughputs,
            grants,
        })
    }
}
