//! Scalar abstraction shared by the simulator, the metrics and the learner.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point type the crate can be instantiated with (`f32` or `f64`).
///
/// Arithmetic and transcendental functions come from [`RealField`];
/// conversions to and from `f64` literals come from num-traits.
pub trait Real: RealField + Copy + Default + FromPrimitive + ToPrimitive {
    /// Converts an `f64` constant into this scalar.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal not representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }

    #[inline]
    fn infinity() -> Self {
        Self::of(f64::INFINITY)
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::of(n as f64)
    }
}

impl Real for f32 {}
impl Real for f64 {}
