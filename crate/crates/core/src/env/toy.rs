//! One-decision timing task with a known optimum, used to sanity-check the learner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Environment, EpisodeSummary, Transition, CLOSE};
use crate::error::EnvError;
use crate::scalar::Real;

/// Each episode hides an ideal closing step `T*` drawn uniformly from
/// `earliest..=latest`. The observation is `[(T* - t) / H, t / H]`.
/// Closing at step `t` ends the episode with `max(-1, 1 - ((t - T*) / width)^2)`;
/// reaching the horizon without closing pays `-1`. The best mean episodic reward is 1.
#[derive(Debug, Clone)]
pub struct ClosingTimingToy {
    pub horizon: u32,
    pub earliest: u32,
    pub latest: u32,
    pub width: f64,
    rng: ChaCha8Rng,
    ideal: u32,
    t: u32,
    active: bool,
}

impl ClosingTimingToy {
    pub const OPTIMUM: f64 = 1.0;

    pub fn new(seed: u64) -> Self {
        Self {
            horizon: 20,
            earliest: 4,
            latest: 16,
            width: 4.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            ideal: 0,
            t: 0,
            active: false,
        }
    }

    pub fn ideal_step(&self) -> u32 {
        self.ideal
    }

    /// Reward for closing at step `t` when the ideal step is `ideal`.
    pub fn closing_reward(&self, t: u32, ideal: u32) -> f64 {
        let z = (t as f64 - ideal as f64) / self.width;
        (1.0 - z * z).max(-1.0)
    }

    fn observation<T: Real>(&self) -> Vec<T> {
        let h = self.horizon as f64;
        vec![
            T::of((self.ideal as f64 - self.t as f64) / h),
            T::of(self.t as f64 / h),
        ]
    }
}

impl<T: Real> Environment<T> for ClosingTimingToy {
    fn observation_dim(&self) -> usize {
        2
    }

    fn reset(&mut self) -> Result<Vec<T>, EnvError> {
        self.ideal = self.rng.random_range(self.earliest..=self.latest);
        self.t = 0;
        self.active = true;
        Ok(self.observation())
    }

    fn step(&mut self, action: usize) -> Result<Transition<T>, EnvError> {
        if !self.active {
            return Err(EnvError::NotStarted);
        }
        let (reward, done) = if action == CLOSE {
            (self.closing_reward(self.t, self.ideal), true)
        } else if self.t + 1 >= self.horizon {
            (-1.0, true)
        } else {
            (0.0, false)
        };
        let n_steps = self.t as usize + 1;
        let t_close = (action == CLOSE).then_some(self.t as f64);
        self.t += 1;
        self.active = !done;
        Ok(Transition {
            observation: self.observation(),
            reward: T::of(reward),
            done,
            episode: done.then_some(EpisodeSummary {
                n_steps,
                total_reward: reward,
                score: reward,
                t_close,
                report: None,
            }),
        })
    }
}
