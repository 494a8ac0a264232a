//! Action and grant data types.

use crate::scalar::Scalar;

/// Joint continuous action: one preference vector per VUE.
///
/// Each vector has length `(K + 1) + S + P`: a base-station preference block
/// with one extra "no association" slot, then shared-channel preferences,
/// then mmWave-channel preferences. The decoder only looks at orderings and
/// signs, so entries outside [-1, 1] decode the same as their clamped
/// counterparts shifted uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAction<S> {
    pub per_vue: Vec<Vec<S>>,
}

impl<S: Scalar> JointAction<S> {
    pub fn new(per_vue: Vec<Vec<S>>) -> Self {
        JointAction { per_vue }
    }

    pub fn vue_count(&self) -> usize {
        self.per_vue.len()
    }
}

/// Resolved outcome for one VUE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VueGrant {
    /// Index of the serving station, `None` when unassociated.
    pub station: Option<usize>,
    /// Granted channel indices within the serving station's pool, ascending.
    pub channels: Vec<usize>,
    /// Set when the VUE opted out or selected an out-of-range station.
    pub association_failed: bool,
    /// Set when association succeeded but no channel was granted.
    pub spectrum_failed: bool,
}

impl VueGrant {
    pub fn failed(&self) -> bool {
        self.association_failed || self.spectrum_failed
    }
}

/// Per-step resolved association/allocation table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrantTable {
    pub vues: Vec<VueGrant>,
    /// Number of same-station channels that were requested by two or more
    /// VUEs this step and therefore granted to nobody.
    pub contested_channels: usize,
}

impl GrantTable {
    /// True iff `vue` holds `channel` on some station.
    pub fn holds(&self, vue: usize, channel: usize) -> bool {
        self.vues[vue].station.is_some() && self.vues[vue].channels.contains(&channel)
    }

    pub fn association_failures(&self) -> usize {
        self.vues.iter().filter(|v| v.association_failed).count()
    }
}

/// Two-bit local observation per VUE: QoS satisfaction and downlink
/// throughput improvement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointObservation {
    /// `(s_qos, s_dl)` pairs, entries exactly 0 or 1.
    pub pairs: Vec<(u8, u8)>,
}

impl JointObservation {
    pub fn zeros(n: usize) -> Self {
        JointObservation {
            pairs: vec![(0, 0); n],
        }
    }

    /// Flattened critic state: all pairs concatenated, length `2N`.
    pub fn flatten<S: Scalar>(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.pairs.len() * 2);
        for &(q, d) in &self.pairs {
            out.push(S::c(q as f64));
            out.push(S::c(d as f64));
        }
        out
    }

    /// One VUE's observation as network input.
    pub fn agent_obs<S: Scalar>(&self, vue: usize) -> [S; 2] {
        let (q, d) = self.pairs[vue];
        [S::c(q as f64), S::c(d as f64)]
    }
}

/// Everything one environment step produces.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<S> {
    pub observations: JointObservation,
    /// Per-VUE immediate reward.
    pub rewards: Vec<S>,
    /// Per-VUE downlink throughput in Mbps.
    pub throughputs: Vec<S>,
    pub grants: GrantTable,
}
