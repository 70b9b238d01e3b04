//! The 26-number observation vector and its normalisation.

use std::f64::consts::TAU;

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::WorldState;
use crate::scalar::Real;

pub const OBSERVATION_DIM: usize = 26;

/// Lower and upper bound of every flattened observation entry.
///
/// The closure flag is encoded as 0 or 1 before normalisation.
pub const BOUNDS: [(f64, f64); OBSERVATION_DIM] = {
    let mut b = [(0.0, 0.0); OBSERVATION_DIM];
    b[0] = (0.0, 120.0);
    b[1] = (-10.0, 10.0);
    b[2] = (-10.0, 10.0);
    b[3] = (0.0, 50.0);
    let mut k = 4;
    while k < 7 {
        b[k] = (0.0, TAU);
        b[k + 3] = (-1.0, 1.0);
        k += 1;
    }
    let mut c = 0;
    while c < 4 {
        b[10 + 3 * c] = (-22.0, 22.0);
        b[11 + 3 * c] = (-22.0, 22.0);
        b[12 + 3 * c] = (0.0, 72.0);
        c += 1;
    }
    b[22] = (0.0, 1.0);
    b[23] = (1.0, 5.0);
    b[24] = (1.0, 5.0);
    b[25] = (1.0, 10.0);
    b
};

/// Physical (unnormalised) observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub target_position: [f64; 3],
    /// Intrinsic Z-Y-X Euler angles (roll, pitch, yaw) wrapped to [0, 2π).
    pub target_orientation: [f64; 3],
    pub target_angular_velocity: [f64; 3],
    pub corner_positions: [[f64; 3]; 4],
    pub closure_flag: bool,
    pub launch_velocity: [f64; 3],
}

fn v3<T: Real>(v: &Vector3<T>) -> [f64; 3] {
    [v.x.as_f64(), v.y.as_f64(), v.z.as_f64()]
}

/// Euler angles of `q` in the observation convention.
pub fn euler_zyx<T: Real>(q: &UnitQuaternion<T>) -> [f64; 3] {
    let (r, p, y) = q.euler_angles();
    [r, p, y].map(|a| a.as_f64().rem_euclid(TAU))
}

impl Observation {
    /// Noise-free observation of `world`.
    pub fn of_world<T: Real>(world: &WorldState<T>, launch_velocity: [f64; 3]) -> Self {
        let corners = world.corner_positions();
        Self {
            time: world.time.as_f64(),
            target_position: v3(&world.target.position),
            target_orientation: euler_zyx(&world.target.orientation),
            target_angular_velocity: v3(&world.target.angular_velocity),
            corner_positions: std::array::from_fn(|k| v3(&corners[k])),
            closure_flag: world.closing_active,
            launch_velocity,
        }
    }

    pub fn to_array(&self) -> [f64; OBSERVATION_DIM] {
        let mut out = [0.0; OBSERVATION_DIM];
        out[0] = self.time;
        out[1..4].copy_from_slice(&self.target_position);
        out[4..7].copy_from_slice(&self.target_orientation);
        out[7..10].copy_from_slice(&self.target_angular_velocity);
        for (k, c) in self.corner_positions.iter().enumerate() {
            out[10 + 3 * k..13 + 3 * k].copy_from_slice(c);
        }
        out[22] = if self.closure_flag { 1.0 } else { 0.0 };
        out[23..26].copy_from_slice(&self.launch_velocity);
        out
    }

    pub fn from_array(a: &[f64; OBSERVATION_DIM]) -> Self {
        let take = |i: usize| [a[i], a[i + 1], a[i + 2]];
        Self {
            time: a[0],
            target_position: take(1),
            target_orientation: take(4),
            target_angular_velocity: take(7),
            corner_positions: std::array::from_fn(|k| take(10 + 3 * k)),
            closure_flag: a[22] > 0.5,
            launch_velocity: take(23),
        }
    }

    /// Clamps each entry to its bounds and maps it affinely onto [-1, 1].
    pub fn normalized<T: Real>(&self) -> Vec<T> {
        self.to_array()
            .iter()
            .zip(BOUNDS)
            .map(|(v, (lo, hi))| T::of(2.0 * (v.clamp(lo, hi) - lo) / (hi - lo) - 1.0))
            .collect()
    }

    /// Inverse of [`Observation::normalized`] for entries that were inside their bounds.
    pub fn from_normalized<T: Real>(x: &[T]) -> Option<Self> {
        if x.len() != OBSERVATION_DIM {
            return None;
        }
        let mut a = [0.0; OBSERVATION_DIM];
        for (k, (lo, hi)) in BOUNDS.iter().enumerate() {
            a[k] = lo + (x[k].as_f64() + 1.0) * 0.5 * (hi - lo);
        }
        Some(Self::from_array(&a))
    }
}
