//! Generalised advantage estimation.

use crate::scalar::Real;

/// Advantages and returns of one worker's trajectory segment.
///
/// `dones[t]` marks that the episode ended with step `t`; `last_value` bootstraps
/// the step after the segment unless the segment ended on a terminal.
pub fn compute_gae<T: Real>(
    rewards: &[T],
    values: &[T],
    dones: &[bool],
    last_value: T,
    gamma: T,
    lambda: T,
) -> (Vec<T>, Vec<T>) {
    let n = rewards.len();
    assert!(
        values.len() == n && dones.len() == n,
        "GAE inputs must have equal length"
    );
    let mut advantages = vec![T::zero(); n];
    let mut next_adv = T::zero();
    let mut next_value = last_value;
    for t in (0..n).rev() {
        let live = if dones[t] { T::zero() } else { T::one() };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        advantages[t] = next_adv;
        next_value = values[t];
    }
    let returns = advantages
        .iter()
        .zip(values)
        .map(|(a, v)| *a + *v)
        .collect();
    (advantages, returns)
}

/// Shifts and scales `x` to zero mean and unit (population) variance.
pub fn normalize<T: Real>(x: &mut [T]) {
    if x.is_empty() {
        return;
    }
    let n = T::of_usize(x.len());
    let mean = x.iter().fold(T::zero(), |a, b| a + *b) / n;
    let var = x
        .iter()
        .fold(T::zero(), |a, b| a + (*b - mean) * (*b - mean))
        / n;
    let scale = var.sqrt() + T::of(1e-8);
    for v in x.iter_mut() {
        *v = (*v - mean) / scale;
    }
}
