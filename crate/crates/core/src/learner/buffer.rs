//! On-policy experience storage.

use super::gae::{compute_gae, normalize};
use crate::scalar::Real;

/// Transitions of one rollout phase, worker-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer<T> {
    pub obs_dim: usize,
    pub observations: Vec<T>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<T>,
    pub values: Vec<T>,
    pub rewards: Vec<T>,
    pub dones: Vec<bool>,
    pub advantages: Vec<T>,
    pub returns: Vec<T>,
}

impl<T: Real> RolloutBuffer<T> {
    pub fn new(obs_dim: usize) -> Self {
        Self {
            obs_dim,
            observations: Vec::new(),
            actions: Vec::new(),
            log_probs: Vec::new(),
            values: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn observation(&self, i: usize) -> &[T] {
        &self.observations[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn push(&mut self, obs: &[T], action: usize, log_prob: T, value: T, reward: T, done: bool) {
        debug_assert_eq!(obs.len(), self.obs_dim);
        self.observations.extend_from_slice(obs);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.values.push(value);
        self.rewards.push(reward);
        self.dones.push(done);
    }

    /// Fills advantages and returns for the transitions pushed since the last call.
    pub fn finish_segment(&mut self, last_value: T, gamma: T, lambda: T) {
        let start = self.advantages.len();
        let (adv, ret) = compute_gae(
            &self.rewards[start..],
            &self.values[start..],
            &self.dones[start..],
            last_value,
            gamma,
            lambda,
        );
        self.advantages.extend(adv);
        self.returns.extend(ret);
    }

    /// Appends a finished segment of another buffer.
    pub fn append(&mut self, other: RolloutBuffer<T>) {
        assert_eq!(other.advantages.len(), other.len(), "segment not finished");
        self.observations.extend(other.observations);
        self.actions.extend(other.actions);
        self.log_probs.extend(other.log_probs);
        self.values.extend(other.values);
        self.rewards.extend(other.rewards);
        self.dones.extend(other.dones);
        self.advantages.extend(other.advantages);
        self.returns.extend(other.returns);
    }

    pub fn normalize_advantages(&mut self) {
        normalize(&mut self.advantages);
    }

    pub fn clear(&mut self) {
        self.observations.clear();
        self.actions.clear();
        self.log_probs.clear();
        self.values.clear();
        self.rewards.clear();
        self.dones.clear();
        self.advantages.clear();
        self.returns.clear();
    }
}
