//! Clipped-surrogate actor-critic loss, its gradient and the update loop.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::buffer::RolloutBuffer;
use super::mlp::ActorCritic;
use crate::error::LearnerError;
use crate::scalar::Real;

/// Policy objective per sample, with `ρ` the new-to-old probability ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surrogate {
    /// `min(ρ·A, clip(ρ, 1 − ε, 1 + ε)·A)`
    Clipped,
    /// `ρ·A`
    Unclipped,
    /// `log π(a|s)·A`
    PolicyGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub clip_range: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub surrogate: Surrogate,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            clip_range: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            surrogate: Surrogate::Clipped,
        }
    }
}

/// Minibatch averages of the loss components.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Loss to minimise over the samples `indices` of `buffer`:
/// `-surrogate + value_coef·(V − R)² − entropy_coef·H`, averaged.
pub fn loss_and_gradient<T: Real>(
    net: &ActorCritic<T>,
    buffer: &RolloutBuffer<T>,
    indices: &[usize],
    weights: &LossWeights,
) -> Result<(LossStats, Vec<T>), LearnerError> {
    let mut grad = vec![T::zero(); net.n_params()];
    let mut stats = LossStats::default();
    if indices.is_empty() {
        return Ok((stats, grad));
    }
    let inv_n = T::one() / T::of_usize(indices.len());
    let eps = T::of(weights.clip_range);
    let ent_coef = T::of(weights.entropy_coef);
    let vf_coef = T::of(weights.value_coef);
    let (mut pg_sum, mut v_sum, mut h_sum, mut kl_sum, mut clipped) = (0.0, 0.0, 0.0, 0.0, 0usize);
    let mut d_logits = Vec::new();

    for &i in indices {
        let pass = net.forward(buffer.observation(i))?;
        let dist = pass.distribution();
        let a = buffer.actions[i];
        let adv = buffer.advantages[i];
        let log_ratio = dist.log_prob(a) - buffer.log_probs[i];
        let ratio = log_ratio.exp();

        // Derivative of the (maximised) surrogate with respect to log π(a|s).
        let (surrogate, d_surr) = match weights.surrogate {
            Surrogate::PolicyGradient => (dist.log_prob(a) * adv, adv),
            Surrogate::Unclipped => (ratio * adv, ratio * adv),
            Surrogate::Clipped => {
                let lo = T::one() - eps;
                let hi = T::one() + eps;
                let clamped = ratio.max(lo).min(hi);
                let saturated = (adv > T::zero() && ratio > hi) || (adv < T::zero() && ratio < lo);
                if clamped != ratio {
                    clipped += 1;
                }
                if saturated {
                    (clamped * adv, T::zero())
                } else {
                    (ratio * adv, ratio * adv)
                }
            }
        };
        let probs = dist.probs();
        let entropy = dist.entropy();
        d_logits.clear();
        for (j, p) in probs.iter().enumerate() {
            let indicator = if j == a { T::one() } else { T::zero() };
            let d_logp = indicator - *p;
            let d_entropy = -*p * (dist.log_probs[j] + entropy);
            d_logits.push((-d_surr * d_logp - ent_coef * d_entropy) * inv_n);
        }
        let err = pass.value - buffer.returns[i];
        let d_value = T::of(2.0) * vf_coef * err * inv_n;
        net.backward(&pass, &d_logits, d_value, &mut grad);

        pg_sum -= surrogate.as_f64();
        v_sum += (err * err).as_f64();
        h_sum += entropy.as_f64();
        kl_sum += ((ratio - T::one()) - log_ratio).as_f64();
    }
    let n = indices.len() as f64;
    stats.policy_loss = pg_sum / n;
    stats.value_loss = v_sum / n;
    stats.entropy = h_sum / n;
    stats.approx_kl = kl_sum / n;
    stats.clip_fraction = clipped as f64 / n;
    stats.loss = stats.policy_loss + weights.value_coef * stats.value_loss
        - weights.entropy_coef * stats.entropy;
    if !stats.loss.is_finite() {
        return Err(LearnerError::NonFinite("loss"));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(LearnerError::NonFinite("gradient"));
    }
    Ok((stats, grad))
}

/// Rescales `grad` to norm `max_norm` if it is longer; returns the norm before clipping.
pub fn clip_grad_norm<T: Real>(grad: &mut [T], max_norm: f64) -> f64 {
    let norm = grad
        .iter()
        .map(|g| g.as_f64() * g.as_f64())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let s = T::of(max_norm / norm);
        for g in grad.iter_mut() {
            *g *= s;
        }
    }
    norm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateSettings {
    pub epochs: usize,
    pub minibatches: usize,
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,
    pub weights: LossWeights,
}

/// Averages over every gradient step of one update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub loss: LossStats,
    pub grad_norm: f64,
    pub gradient_steps: usize,
}

/// Runs the epoch/minibatch loop on a full buffer, then clears it.
///
/// On a non-finite loss the update stops and the parameters keep their last finite values.
pub fn ppo_update<T: Real, R: Rng + ?Sized>(
    net: &mut ActorCritic<T>,
    optimiser: &mut Adam<T>,
    buffer: &mut RolloutBuffer<T>,
    settings: &UpdateSettings,
    rng: &mut R,
) -> Result<UpdateStats, LearnerError> {
    if settings.normalize_advantages {
        buffer.normalize_advantages();
    }
    let n = buffer.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mb = n.div_ceil(settings.minibatches.max(1)).max(1);
    let mut acc = UpdateStats::default();
    for _ in 0..settings.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(mb) {
            let (stats, mut grad) = loss_and_gradient(net, buffer, chunk, &settings.weights)?;
            let norm = clip_grad_norm(&mut grad, settings.max_grad_norm);
            let backup = net.params.clone();
            optimiser.apply(&mut net.params, &grad);
            if net.params.iter().any(|p| !p.is_finite()) {
                net.params = backup;
                return Err(LearnerError::NonFinite("parameters"));
            }
            acc.gradient_steps += 1;
            acc.grad_norm += norm;
            acc.loss.loss += stats.loss;
            acc.loss.policy_loss += stats.policy_loss;
            acc.loss.value_loss += stats.value_loss;
            acc.loss.entropy += stats.entropy;
            acc.loss.approx_kl += stats.approx_kl;
            acc.loss.clip_fraction += stats.clip_fraction;
        }
    }
    buffer.clear();
    if acc.gradient_steps > 0 {
        let k = acc.gradient_steps as f64;
        acc.grad_norm /= k;
        acc.loss.loss /= k;
        acc.loss.policy_loss /= k;
        acc.loss.value_loss /= k;
        acc.loss.entropy /= k;
        acc.loss.approx_kl /= k;
        acc.loss.clip_fraction /= k;
    }
    Ok(acc)
}
