//! Initial target states sampled per episode.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::EnvError;

/// One draw of the target's initial distance, attitude and spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoESample {
    /// Distance from the chaser along +z, m.
    pub distance: f64,
    /// Intrinsic Z-Y-X Euler angles (roll, pitch, yaw), rad.
    pub orientation: [f64; 3],
    /// World-frame angular velocity, rad/s.
    pub angular_velocity: [f64; 3],
    pub seed: u64,
}

impl DoESample {
    pub fn new(
        distance: f64,
        orientation: [f64; 3],
        angular_velocity: [f64; 3],
        seed: u64,
    ) -> Self {
        Self {
            distance,
            orientation,
            angular_velocity,
            seed,
        }
    }

    /// Target at `distance` with no rotation.
    pub fn at_distance(distance: f64) -> Self {
        Self::new(distance, [0.0; 3], [0.0; 3], 0)
    }
}

/// Box bounds of the initial-state design of experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoeRanges {
    pub distance: [f64; 2],
    pub orientation_min: [f64; 3],
    pub orientation_max: [f64; 3],
    pub angular_velocity_min: [f64; 3],
    pub angular_velocity_max: [f64; 3],
}

impl Default for DoeRanges {
    fn default() -> Self {
        Self {
            distance: [25.0, 35.0],
            orientation_min: [0.0; 3],
            orientation_max: [PI / 2.0, 0.0, 0.0],
            angular_velocity_min: [0.0, -PI / 18.0, -PI / 18.0],
            angular_velocity_max: [0.0, PI / 18.0, PI / 18.0],
        }
    }
}

impl DoeRanges {
    pub fn validate(&self, doe: &DoESample) -> Result<(), EnvError> {
        const TOL: f64 = 1e-12;
        let within = |v: f64, lo: f64, hi: f64| v.is_finite() && v >= lo - TOL && v <= hi + TOL;
        if !within(doe.distance, self.distance[0], self.distance[1]) {
            return Err(EnvError::InvalidDoe(format!(
                "distance {} m outside [{}, {}] m",
                doe.distance, self.distance[0], self.distance[1]
            )));
        }
        for i in 0..3 {
            if !within(
                doe.orientation[i],
                self.orientation_min[i],
                self.orientation_max[i],
            ) {
                return Err(EnvError::InvalidDoe(format!(
                    "orientation[{i}] = {} rad outside [{}, {}]",
                    doe.orientation[i], self.orientation_min[i], self.orientation_max[i]
                )));
            }
            if !within(
                doe.angular_velocity[i],
                self.angular_velocity_min[i],
                self.angular_velocity_max[i],
            ) {
                return Err(EnvError::InvalidDoe(format!(
                    "angular_velocity[{i}] = {} rad/s outside [{}, {}]",
                    doe.angular_velocity[i],
                    self.angular_velocity_min[i],
                    self.angular_velocity_max[i]
                )));
            }
        }
        Ok(())
    }

    /// Uniform draw inside the box; `seed` is stored on the sample for bookkeeping.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, seed: u64) -> DoESample {
        let mut uniform = |lo: f64, hi: f64| {
            if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            }
        };
        let distance = uniform(self.distance[0], self.distance[1]);
        let orientation =
            std::array::from_fn(|i| uniform(self.orientation_min[i], self.orientation_max[i]));
        let angular_velocity = std::array::from_fn(|i| {
            uniform(self.angular_velocity_min[i], self.angular_velocity_max[i])
        });
        DoESample {
            distance,
            orientation,
            angular_velocity,
            seed,
        }
    }
}
