//! Fixed-capacity FIFO replay buffer over joint transitions.

use rand::Rng;

use crate::error::{CaraError, Result};
use crate::scalar::Scalar;

/// One experience tuple over all agents: joint observation, per-agent
/// actions, per-agent rewards, next joint observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S> {
    pub joint_obs: Vec<S>,
    pub actions: Vec<Vec<S>>,
    pub rewards: Vec<S>,
    pub next_obs: Vec<S>,
}

/// Ring buffer with strictly oldest-first eviction.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<S> {
    items: Vec<Transition<S>>,
    capacity: usize,
    /// Ring slot the next push overwrites once full.
    next: usize,
    /// Total number of pushes ever.
    pushes: u64,
    obs_len: usize,
    agent_count: usize,
    action_len: usize,
}

impl<S: Scalar> ReplayBuffer<S> {
    pub fn new(capacity: usize, obs_len: usize, agent_count: usize, action_len: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(CaraError::InvalidArgument("replay capacity must be positive".into()));
        }
        Ok(ReplayBuffer {
            items: Vec::with_capacity(capacity),
            capacity,
            next: 0,
            pushes: 0,
            obs_len,
            agent_count,
            action_len,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn pushes(&self) -> u64 {
        self.pushes
    }

    pub fn get(&self, index: usize) -> &Transition<S> {
        &self.items[index]
    }

    fn check_shape(&self, t: &Transition<S>) -> Result<()> {
        let checks = [
            ("transition joint_obs", self.obs_len, t.joint_obs.len()),
            ("transition next_obs", self.obs_len, t.next_obs.len()),
            ("transition rewards", self.agent_count, t.rewards.len()),
            ("transition actions", self.agent_count, t.actions.len()),
        ];
        for (context, expected, actual) in checks {
            if expected != actual {
                return Err(CaraError::Shape {
                    context: context.into(),
                    expected,
                    actual,
                });
            }
        }
        for a in &t.actions {
            if a.len() != self.action_len {
                return Err(CaraError::Shape {
                    context: "transition action vector".into(),
                    expected: self.action_len,
                    actual: a.len(),
                });
            }
        }
        let finite = t.joint_obs.iter().all(|v| v.is_finite())
            && t.next_obs.iter().all(|v| v.is_finite())
            && t.rewards.iter().all(|v| v.is_finite())
            && t.actions.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(CaraError::NonFinite("transition".into()));
        }
        Ok(())
    }

    /// Stores a transition, evicting the oldest one at capacity.
    pub fn push(&mut self, t: Transition<S>) -> Result<()> {
        self.check_shape(&t)?;
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
            self.next = (self.next + 1) % self.capacity;
        }
        self.pushes += 1;
        Ok(())
    }

    /// Draws `count` distinct transitions uniformly; deterministic per rng
    /// state. Errors while the buffer is still warming up.
    pub fn sample<'a, R: Rng>(&'a self, count: usize, rng: &mut R) -> Result<Vec<&'a Transition<S>>> {
        if count > self.items.len() {
            return Err(CaraError::InvalidArgument(format!(
                "cannot sample {count} transitions from a buffer of {}",
                self.items.len()
            )));
        }
        let picked = rand::seq::index::sample(rng, self.items.len(), count);
        Ok(picked.into_iter().map(|i| &self.items[i]).collect())
    }

    /// Internal ring state for checkpointing: `(items, next, pushes)`.
    pub fn ring_state(&self) -> (&[Transition<S>], usize, u64) {
        (&self.items, self.next, self.pushes)
    }

    /// Rebuilds a buffer from checkpointed ring state, preserving indexing
    /// bit-for-bit so resumed sampling matches an uninterrupted run.
    pub fn from_ring_state(
        capacity: usize,
        obs_len: usize,
        agent_count: usize,
        action_len: usize,
        items: Vec<Transition<S>>,
        next: usize,
        pushes: u64,
    ) -> Result<Self> {
        let mut buf = ReplayBuffer::new(capacity, obs_len, agent_count, action_len)?;
        if items.len() > capacity {
            return Err(CaraError::InvalidArgument(format!(
                "ring state holds {} items but capacity is {capacity}",
                items.len()
            )));
        }
        for t in &items {
            buf.check_shape(t)?;
        }
        buf.items = items;
        buf.next = next;
        buf.pushes = pushes;
        Ok(buf)
    }
}
