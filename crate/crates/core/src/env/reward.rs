//! Shaped per-step reward, end-of-episode reward and the premature-closing rule.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::coefficients::{EndWeights, RewardCoefficients};
use crate::dynamics::TargetSpec;
use crate::error::EnvError;
use crate::metrics::{CaptureTerms, NetGeometrySnapshot};
use crate::scalar::Real;

/// Thresholds of the premature-closing test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrematureRule {
    /// Closing earlier than this may be premature, s.
    pub before: f64,
    /// Net-centre to target distance, m.
    pub com_distance: f64,
    /// Mean corner-mass to target distance, m.
    pub corner_distance: f64,
}

impl Default for PrematureRule {
    fn default() -> Self {
        Self {
            before: 15.0,
            com_distance: 12.0,
            corner_distance: 10.0,
        }
    }
}

impl PrematureRule {
    pub fn is_premature(
        &self,
        closed: bool,
        t_close: f64,
        com_distance: f64,
        corner_distance: f64,
    ) -> bool {
        closed
            && t_close < self.before
            && (com_distance > self.com_distance || corner_distance > self.corner_distance)
    }
}

/// Premature-closing test with the default thresholds (15 s, 12 m, 10 m).
pub fn premature_closing(
    closed: bool,
    t_close: f64,
    com_distance: f64,
    corner_distance: f64,
) -> bool {
    PrematureRule::default().is_premature(closed, t_close, com_distance, corner_distance)
}

fn terms<T: Real>(
    snapshot: &NetGeometrySnapshot<T>,
    target_position: &Vector3<T>,
    spec: &TargetSpec<T>,
) -> Result<CaptureTerms<T>, EnvError> {
    CaptureTerms::new(snapshot, target_position, spec).ok_or_else(|| {
        EnvError::Config("target volume, area and reference distance must be non-zero".into())
    })
}

/// Reward of one learning step at time `t`.
///
/// With `premature` set the whole reward is `-(t1 - t_close)^2`; otherwise it
/// is the weighted geometry terms plus the two time terms and `C5`.
pub fn step_reward<T: Real>(
    snapshot: &NetGeometrySnapshot<T>,
    target_position: &Vector3<T>,
    spec: &TargetSpec<T>,
    coeffs: &RewardCoefficients,
    t: T,
    premature: bool,
    t_close: T,
) -> Result<T, EnvError> {
    let k = &coeffs.step;
    let t1 = T::of(k.t1);
    if premature {
        let gap = t1 - t_close;
        return Ok(-gap * gap);
    }
    let x = terms(snapshot, target_position, spec)?;
    let w = k.w.map(T::of);
    let c = k.c.map(T::of);
    let t2 = T::of(k.t2);
    let late = T::of(0.12) * (t.max(t2) - t2);
    Ok(w[0] * (c[0] - x.volume_ratio)
        + w[1] * (c[1] - x.area_ratio)
        + w[2] * (c[2] - x.offset_ratio)
        + w[3] * (T::of_usize(x.locked) - c[3])
        + T::of(0.4) * (t.min(t1) - T::of(4.6))
        - late * late
        + c[4])
}

/// End-of-episode reward from the settled snapshot, or `C6` when the net was never closed.
pub fn end_reward<T: Real>(
    settled: Option<(&NetGeometrySnapshot<T>, &Vector3<T>)>,
    spec: &TargetSpec<T>,
    end: &EndWeights,
) -> Result<T, EnvError> {
    let Some((snapshot, target_position)) = settled else {
        return Ok(T::of(end.c6));
    };
    let x = terms(snapshot, target_position, spec)?;
    let w = end.w.map(T::of);
    let c = end.c.map(T::of);
    Ok(w[0] * (c[0] - x.volume_ratio)
        + w[1] * (c[1] - x.area_ratio)
        + w[2] * (c[2] - x.offset_ratio)
        + w[3] * (T::of_usize(x.locked) - c[3])
        + c[4])
}
