//! Deterministic 3-tier heterogeneous vehicular network simulator with
//! from-scratch multi-agent reinforcement-learning trainers.
//!
//! Vehicle agents (VUEs) jointly pick a serving base station and a set of
//! channels each step; the environment resolves contention, prices the
//! outcome (SINR, Shannon throughput, power cost, failure penalties) and
//! feeds two-bit observations back. Three trainers share the harness:
//! MADDPG (centralized critics), decentralized DDPG, and a vanilla
//! actor-critic baseline, plus a uniform-random yardstick policy.
//!
//! All numeric code is generic over the scalar type via [`scalar::Scalar`];
//! the aliases at the crate root fix `f64`, which is what the CLI and the
//! experiment harness use.

pub mod baselines;
pub mod checkpoint;
pub mod config;
pub mod env;
pub mod error;
pub mod experiment;
pub mod maddpg;
pub mod nn;
pub mod replay;
pub mod metrics;
pub mod rng;
pub mod scalar;
pub mod train;

pub use error::{CaraError, Result};
pub use scalar::Scalar;

/// Scalar type used by the CLI and the shipped experiment harness.
pub type Real = f64;

/// `f64`-backed aliases for the main types.
pub type Topology64 = env::Topology<f64>;
pub type TopologyParams64 = env::TopologyParams<f64>;
pub type HetVNet64 = env::HetVNet<f64>;
pub type JointAction64 = env::JointAction<f64>;
pub type StepOutcome64 = env::StepOutcome<f64>;
pub type MlpNet64 = nn::MlpNet<f64>;
pub type GradPack64 = nn::GradPack<f64>;
pub type AdamState64 = nn::AdamState<f64>;
