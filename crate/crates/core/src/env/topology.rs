//! Static network description: base stations, channel pools, tariff
//! constants, and the seeded placement procedure.

use rand::Rng;

use crate::error::{CaraError, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Base-station tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    /// Macro cell: wide coverage, shared spectrum.
    Macro,
    /// Micro cell: shared spectrum, smaller coverage.
    Micro,
    /// mmWave pico cell: wide channels, short range.
    Pico,
}

/// Which orthogonal channel pool a station draws from. Macro and micro
/// cells share one pool; pico cells use the mmWave pool. Pools never
/// interfere with each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pool {
    Shared,
    MmWave,
}

impl Tier {
    pub fn pool(self) -> Pool {
        match self {
            Tier::Macro | Tier::Micro => Pool::Shared,
            Tier::Pico => Pool::MmWave,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tier::Macro => "macro",
            Tier::Micro => "micro",
            Tier::Pico => "pico",
        }
    }
}

/// One base station.
#[derive(Debug, Clone, PartialEq)]
pub struct Station<S> {
    pub tier: Tier,
    /// Planar position in meters.
    pub position: [S; 2],
    /// Coverage radius in meters; association beyond it fails.
    pub radius: S,
    /// Per-channel transmit power in dBm.
    pub tx_power_dbm: S,
    /// Per-channel bandwidth in Hz.
    pub bandwidth_hz: S,
    /// Path loss `a + b*log10(d)` coefficients in dB.
    pub pathloss_a: S,
    pub pathloss_b: S,
}

impl<S: Scalar> Station<S> {
    pub fn pool(&self) -> Pool {
        self.tier.pool()
    }

    pub fn distance_to(&self, pos: [S; 2]) -> S {
        let dx = self.position[0] - pos[0];
        let dy = self.position[1] - pos[1];
        (dx * dx + dy * dy).sqrt()
    }

    /// Linear power gain of the downlink toward `pos`.
    ///
    /// Distances below one meter are clamped to one meter, which removes the
    /// log10 singularity; at d = 1 the gain is exactly `10^(-a/10)`.
    pub fn link_gain(&self, pos: [S; 2]) -> S {
        let d = self.distance_to(pos).max(S::one());
        let pl_db = self.pathloss_a + self.pathloss_b * d.log10();
        S::c(10.0).powf(-pl_db / S::c(10.0))
    }

    /// Transmit power per channel in linear milliwatts.
    pub fn tx_power_mw(&self) -> S {
        S::c(10.0).powf(self.tx_power_dbm / S::c(10.0))
    }
}

/// Everything `build_topology` needs: station counts, geometry, radio
/// constants and tariff parameters. Defaults are the full-scale deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyParams<S> {
    pub mabs_count: usize,
    pub mibs_count: usize,
    pub pbs_count: usize,
    pub vue_count: usize,
    pub mabs_radius_m: S,
    pub mibs_radius_m: S,
    pub pbs_radius_m: S,
    pub mabs_power_dbm: S,
    pub mibs_power_dbm: S,
    pub pbs_power_dbm: S,
    /// Channel bandwidth of the shared (macro/micro) pool, Hz.
    pub shared_bandwidth_hz: S,
    /// Channel bandwidth of the mmWave (pico) pool, Hz.
    pub mmwave_bandwidth_hz: S,
    pub shared_pathloss_a: S,
    pub shared_pathloss_b: S,
    pub pico_pathloss_a: S,
    pub pico_pathloss_b: S,
    /// Size of the shared orthogonal channel pool.
    pub shared_channels: usize,
    /// Size of the mmWave channel pool.
    pub mmwave_channels: usize,
    /// Carrier-aggregation cap per VUE.
    pub max_channels: usize,
    /// QoS baseline on the aggregate SINR, dB.
    pub qos_threshold_db: S,
    /// Noise power density, dBm/Hz.
    pub noise_density_dbm_hz: S,
    /// Cost per unit power level.
    pub rho: S,
    /// Profit per Mbps of downlink throughput.
    pub eta: S,
    /// Penalty charged on association or spectrum-access failure.
    pub upsilon: S,
}

impl<S: Scalar> Default for TopologyParams<S> {
    fn default() -> Self {
        TopologyParams {
            mabs_count: 1,
            mibs_count: 10,
            pbs_count: 50,
            vue_count: 100,
            mabs_radius_m: S::c(3000.0),
            mibs_radius_m: S::c(500.0),
            pbs_radius_m: S::c(100.0),
            mabs_power_dbm: S::c(40.0),
            mibs_power_dbm: S::c(35.0),
            pbs_power_dbm: S::c(20.0),
            shared_bandwidth_hz: S::c(180e3),
            mmwave_bandwidth_hz: S::c(800e6),
            shared_pathloss_a: S::c(34.0),
            shared_pathloss_b: S::c(40.0),
            pico_pathloss_a: S::c(37.0),
            pico_pathloss_b: S::c(30.0),
            shared_channels: 30,
            mmwave_channels: 5,
            max_channels: 2,
            qos_threshold_db: S::c(7.0),
            noise_density_dbm_hz: S::c(-175.0),
            rho: S::c(1e-3),
            eta: S::c(1e-3),
            upsilon: S::c(1e-2),
        }
    }
}

/// Immutable deployment: ordered station list (macro block, then micro,
/// then pico), initial VUE positions, channel pools and tariff constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology<S> {
    pub stations: Vec<Station<S>>,
    /// Initial VUE positions; episodes redraw working copies at reset.
    pub vues: Vec<[S; 2]>,
    pub shared_channels: usize,
    pub mmwave_channels: usize,
    pub max_channels: usize,
    pub qos_threshold_db: S,
    pub noise_density_dbm_hz: S,
    pub rho: S,
    pub eta: S,
    pub upsilon: S,
}

impl<S: Scalar> Topology<S> {
    pub fn station_count(&self) -> usize {
        self.stations.len()
    }

    pub fn vue_count(&self) -> usize {
        self.vues.len()
    }

    /// Per-agent action vector length: one preference per station plus a
    /// "no association" slot, then one preference per channel of each pool.
    pub fn action_len(&self) -> usize {
        self.stations.len() + 1 + self.shared_channels + self.mmwave_channels
    }

    /// Pool size a station of the given index draws from.
    pub fn pool_size(&self, station: usize) -> usize {
        match self.stations[station].pool() {
            Pool::Shared => self.shared_channels,
            Pool::MmWave => self.mmwave_channels,
        }
    }

    /// Station counts by tier `(macro, micro, pico)`.
    pub fn tier_counts(&self) -> (usize, usize, usize) {
        let count = |t: Tier| self.stations.iter().filter(|s| s.tier == t).count();
        (count(Tier::Macro), count(Tier::Micro), count(Tier::Pico))
    }

    /// Checks the structural invariants: ordered tier blocks, positive
    /// counts and radii, and every VUE inside the macro coverage disc.
    pub fn validate(&self) -> Result<()> {
        let (ka, ki, kp) = self.tier_counts();
        if ka == 0 || ki == 0 || kp == 0 {
            return Err(CaraError::InvalidArgument(format!(
                "every tier needs at least one station, got macro={ka} micro={ki} pico={kp}"
            )));
        }
        let expected: Vec<Tier> = std::iter::repeat(Tier::Macro)
            .take(ka)
            .chain(std::iter::repeat(Tier::Micro).take(ki))
            .chain(std::iter::repeat(Tier::Pico).take(kp))
            .collect();
        for (i, (s, want)) in self.stations.iter().zip(expected.iter()).enumerate() {
            if s.tier != *want {
                return Err(CaraError::InvalidArgument(format!(
                    "station {i} breaks the macro/micro/pico ordering (found {})",
                    s.tier.name()
                )));
            }
        }
        if self.vues.is_empty() {
            return Err(CaraError::InvalidArgument("topology needs at least one VUE".into()));
        }
        if self.shared_channels == 0 || self.mmwave_channels == 0 {
            return Err(CaraError::InvalidArgument(
                "channel pools must be non-empty".into(),
            ));
        }
        if self.max_channels == 0 {
            return Err(CaraError::InvalidArgument(
                "carrier-aggregation cap must be at least 1".into(),
            ));
        }
        for (i, s) in self.stations.iter().enumerate() {
            if !(s.radius > S::zero()) || !(s.bandwidth_hz > S::zero()) {
                return Err(CaraError::InvalidArgument(format!(
                    "station {i} needs positive radius and bandwidth"
                )));
            }
        }
        let macro_cell = &self.stations[0];
        for (i, &v) in self.vues.iter().enumerate() {
            if macro_cell.distance_to(v) > macro_cell.radius {
                return Err(CaraError::InvalidArgument(format!(
                    "VUE {i} lies outside the macro coverage disc"
                )));
            }
        }
        Ok(())
    }
}

fn draw_in_disc<S: Scalar, R: Rng>(rng: &mut R, radius: S) -> [S; 2] {
    let r = radius * S::c(rng.gen::<f64>().sqrt());
    let theta = S::c(rng.gen::<f64>() * 2.0 * std::f64::consts::PI);
    [r * theta.cos(), r * theta.sin()]
}

/// Builds a deployment from `params`: the first macro cell sits at the
/// origin, every other station and all VUEs are drawn uniformly in the
/// macro disc from the seeded generator. Regenerating with the same seed
/// reproduces positions bitwise.
pub fn build_topology<S: Scalar>(params: &TopologyParams<S>, seed: u64) -> Result<Topology<S>> {
    if params.mabs_count == 0 || params.mibs_count == 0 || params.pbs_count == 0 {
        return Err(CaraError::InvalidArgument(format!(
            "station counts must be positive, got macro={} micro={} pico={}",
            params.mabs_count, params.mibs_count, params.pbs_count
        )));
    }
    if params.vue_count == 0 {
        return Err(CaraError::InvalidArgument("vue_count must be positive".into()));
    }
    if params.max_channels == 0 {
        return Err(CaraError::InvalidArgument("max_channels must be at least 1".into()));
    }
    if params.shared_channels == 0 || params.mmwave_channels == 0 {
        return Err(CaraError::InvalidArgument("channel pools must be non-empty".into()));
    }

    let mut gen = rng::stream(&[seed, rng::salt::TOPOLOGY]);
    let macro_radius = params.mabs_radius_m;
    let mut stations = Vec::with_capacity(params.mabs_count + params.mibs_count + params.pbs_count);

    for i in 0..params.mabs_count {
        let position = if i == 0 {
            [S::zero(), S::zero()]
        } else {
            draw_in_disc(&mut gen, macro_radius)
        };
        stations.push(Station {
            tier: Tier::Macro,
            position,
            radius: params.mabs_radius_m,
            tx_power_dbm: params.mabs_power_dbm,
            bandwidth_hz: params.shared_bandwidth_hz,
            pathloss_a: params.shared_pathloss_a,
            pathloss_b: params.shared_pathloss_b,
        });
    }
    for _ in 0..params.mibs_count {
        stations.push(Station {
            tier: Tier::Micro,
            position: draw_in_disc(&mut gen, macro_radius),
            radius: params.mibs_radius_m,
            tx_power_dbm: params.mibs_power_dbm,
            bandwidth_hz: params.shared_bandwidth_hz,
            pathloss_a: params.shared_pathloss_a,
            pathloss_b: params.shared_pathloss_b,
        });
    }
    for _ in 0..params.pbs_count {
        stations.push(Station {
            tier: Tier::Pico,
            position: draw_in_disc(&mut gen, macro_radius),
            radius: params.pbs_radius_m,
            tx_power_dbm: params.pbs_power_dbm,
            bandwidth_hz: params.mmwave_bandwidth_hz,
            pathloss_a: params.pico_pathloss_a,
            pathloss_b: params.pico_pathloss_b,
        });
    }
    let vues = (0..params.vue_count)
        .map(|_| draw_in_disc(&mut gen, macro_radius))
        .collect();

    let topology = Topology {
        stations,
        vues,
        shared_channels: params.shared_channels,
        mmwave_channels: params.mmwave_channels,
        max_channels: params.max_channels,
        qos_threshold_db: params.qos_threshold_db,
        noise_density_dbm_hz: params.noise_density_dbm_hz,
        rho: params.rho,
        eta: params.eta,
        upsilon: params.upsilon,
    };
    topology.validate()?;
    Ok(topology)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn full_scale_layout() {
        let params = TopologyParams::<f64>::default();
        let topo = build_topology(&params, 1).unwrap();
        assert_eq!(topo.station_count(), 1 + 10 + 50);
        assert_eq!(topo.vue_count(), 100);
        assert_eq!(topo.tier_counts(), (1, 10, 50));
        assert_eq!(topo.stations[0].position, [0.0, 0.0]);
        assert_eq!(topo.stations[0].radius, 3000.0);
        assert_eq!(topo.stations[1].radius, 500.0);
        assert_eq!(topo.stations[60].radius, 100.0);
        assert_eq!(topo.stations[0].tx_power_dbm, 40.0);
        assert_eq!(topo.stations[1].tx_power_dbm, 35.0);
        assert_eq!(topo.stations[60].tx_power_dbm, 20.0);
        topo.validate().unwrap();
    }

    #[test]
    fn desk_scale_is_deterministic_per_seed() {
        let params = TopologyParams::<f64> {
            mabs_count: 1,
            mibs_count: 2,
            pbs_count: 4,
            vue_count: 4,
            ..TopologyParams::default()
        };
        let a = build_topology(&params, 7).unwrap();
        let b = build_topology(&params, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.station_count(), 7);
        let c = build_topology(&params, 8).unwrap();
        assert_ne!(a.vues, c.vues);
    }

    #[test]
    fn zero_pico_count_is_rejected() {
        let params = TopologyParams::<f64> {
            pbs_count: 0,
            ..TopologyParams::default()
        };
        assert!(build_topology(&params, 1).is_err());
    }

    #[test]
    fn zero_channel_cap_is_rejected() {
        let params = TopologyParams::<f64> {
            max_channels: 0,
            ..TopologyParams::default()
        };
        assert!(build_topology(&params, 1).is_err());
    }

    #[test]
    fn link_gain_examples() {
        let station = Station {
            tier: Tier::Macro,
            position: [0.0f64, 0.0],
            radius: 3000.0,
            tx_power_dbm: 40.0,
            bandwidth_hz: 180e3,
            pathloss_a: 34.0,
            pathloss_b: 40.0,
        };
        // d = 1 m: the log term vanishes, PL = 34 dB.
        assert_relative_eq!(station.link_gain([1.0, 0.0]), 10f64.powf(-3.4), max_relative = 1e-12);
        // Below 1 m clamps to 1 m.
        assert_relative_eq!(station.link_gain([0.01, 0.0]), 10f64.powf(-3.4), max_relative = 1e-12);
        // d = 100 m: PL = 34 + 80 = 114 dB.
        assert_relative_eq!(station.link_gain([100.0, 0.0]), 10f64.powf(-11.4), max_relative = 1e-12);

        let pico = Station {
            tier: Tier::Pico,
            position: [0.0f64, 0.0],
            radius: 100.0,
            tx_power_dbm: 20.0,
            bandwidth_hz: 800e6,
            pathloss_a: 37.0,
            pathloss_b: 30.0,
        };
        // d = 10 m: PL = 37 + 30 = 67 dB.
        assert_relative_eq!(pico.link_gain([0.0, 10.0]), 10f64.powf(-6.7), max_relative = 1e-12);
    }

    #[test]
    fn all_positions_inside_macro_disc() {
        let params = TopologyParams::<f64> {
            mabs_count: 1,
            mibs_count: 3,
            pbs_count: 5,
            vue_count: 20,
            ..TopologyParams::default()
        };
        let topo = build_topology(&params, 42).unwrap();
        for s in &topo.stations {
            assert!(topo.stations[0].distance_to(s.position) <= 3000.0);
        }
        for &v in &topo.vues {
            assert!(topo.stations[0].distance_to(v) <= 3000.0);
        }
    }
}
