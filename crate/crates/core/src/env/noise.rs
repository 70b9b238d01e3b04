//! Additive Gaussian observation and actuation noise.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Standard deviations of every noisy channel. Each is half of the quoted 2σ margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Resampled at every learning step.
    pub orientation: [f64; 3],
    pub angular_velocity: [f64; 3],
    pub corner_position: [f64; 3],
    /// Drawn once per episode.
    pub target_position: [f64; 3],
    pub launch_velocity: [f64; 3],
}

impl Default for NoiseModel {
    fn default() -> Self {
        let ang = PI / 72.0;
        Self {
            orientation: [ang; 3],
            angular_velocity: [ang; 3],
            corner_position: [0.05, 0.05, 0.125],
            target_position: [0.05, 0.05, 0.125],
            launch_velocity: [0.025, 0.025, 0.05],
        }
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            orientation: [0.0; 3],
            angular_velocity: [0.0; 3],
            corner_position: [0.0; 3],
            target_position: [0.0; 3],
            launch_velocity: [0.0; 3],
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::none()
    }

    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.orientation,
            self.angular_velocity,
            self.corner_position,
            self.target_position,
            self.launch_velocity,
        ];
        if all.iter().flatten().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err("noise standard deviations must be finite and non-negative".into());
        }
        Ok(())
    }
}

/// One zero-mean Gaussian draw per axis. A zero σ yields exactly zero and consumes no randomness.
pub fn sample3<R: Rng + ?Sized>(rng: &mut R, sigma: &[f64; 3]) -> [f64; 3] {
    sigma.map(|s| {
        if s == 0.0 {
            0.0
        } else {
            Normal::new(0.0, s)
                .expect("finite non-negative sigma")
                .sample(rng)
        }
    })
}
