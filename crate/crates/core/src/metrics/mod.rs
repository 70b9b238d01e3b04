//! Net geometry, locked-pair count and the capture quality index.

pub mod hull;

use nalgebra::Vector3;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dynamics::{TargetSpec, WorldState, DRAWSTRING_LEN};
use crate::env::doe::DoESample;
use crate::scalar::Real;

pub use hull::Hull;

/// A CQI below this value counts as a secure capture.
pub const SUCCESS_CQI: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetGeometrySnapshot<T: Real> {
    /// Enclosed (convex hull) volume V_n, m^3.
    pub volume: T,
    /// Hull surface area S_n, m^2.
    pub area: T,
    /// Mass-weighted centre q_n of knots and corner masses.
    pub com: Vector3<T>,
    pub locked: usize,
    pub time: T,
}

/// Hull volume/area, centre of mass and lock count of the net in `world`.
pub fn net_snapshot<T: Real>(world: &WorldState<T>) -> NetGeometrySnapshot<T> {
    let points = world.net_positions();
    let masses = world.net_masses();
    let mut total = T::zero();
    let mut moment = Vector3::zeros();
    for (p, m) in points.iter().zip(masses) {
        total += *m;
        moment += p * *m;
    }
    let hull = Hull::build(points);
    NetGeometrySnapshot {
        volume: hull.volume,
        area: hull.area,
        com: moment / total,
        locked: world.locked_count(),
        time: world.time,
    }
}

/// The four normalised mismatch terms shared by the CQI and the shaped reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureTerms<T> {
    pub volume_ratio: T,
    pub area_ratio: T,
    /// ‖q_n − p_target‖ / q_t.
    pub offset_ratio: T,
    pub locked: usize,
}

impl<T: Real> CaptureTerms<T> {
    /// `None` if any reference quantity of the target is zero.
    pub fn new(
        snapshot: &NetGeometrySnapshot<T>,
        target_position: &Vector3<T>,
        spec: &TargetSpec<T>,
    ) -> Option<Self> {
        if spec.volume == T::zero()
            || spec.area == T::zero()
            || spec.reference_distance == T::zero()
        {
            return None;
        }
        Some(Self {
            volume_ratio: ((snapshot.volume - spec.volume) / spec.volume).abs(),
            area_ratio: ((snapshot.area - spec.area) / spec.area).abs(),
            offset_ratio: (snapshot.com - target_position).norm() / spec.reference_distance,
            locked: snapshot.locked,
        })
    }

    /// Sum of the terms with unit weights; lock deficit scaled by the 12 pairs.
    pub fn cqi(&self) -> T {
        let deficit = T::of_usize(DRAWSTRING_LEN - self.locked.min(DRAWSTRING_LEN))
            / T::of_usize(DRAWSTRING_LEN);
        self.volume_ratio + self.area_ratio + self.offset_ratio + deficit
    }
}

/// Capture quality of the settled world; `+∞` if the net was never closed.
pub fn compute_cqi<T: Real>(world_at_settle: &WorldState<T>, spec: &TargetSpec<T>) -> T {
    if !world_at_settle.closing_active {
        return T::infinity();
    }
    let snap = net_snapshot(world_at_settle);
    CaptureTerms::new(&snap, &world_at_settle.target.position, spec)
        .map(|t| t.cqi())
        .unwrap_or_else(T::infinity)
}

pub fn is_success(cqi: f64) -> bool {
    cqi < SUCCESS_CQI
}

/// Outcome of one capture rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureReport {
    /// `null` in JSON when the net never closed or the rollout failed.
    #[serde(serialize_with = "ser_cqi", deserialize_with = "de_cqi")]
    pub cqi: f64,
    pub n_locked: usize,
    pub t_close: Option<f64>,
    pub success: bool,
    pub episode_seed: u64,
    pub doe: DoESample,
    /// Set when the rollout aborted on a simulation error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl CaptureReport {
    pub fn new(
        cqi: f64,
        n_locked: usize,
        t_close: Option<f64>,
        episode_seed: u64,
        doe: DoESample,
    ) -> Self {
        Self {
            cqi,
            n_locked,
            t_close,
            success: is_success(cqi),
            episode_seed,
            doe,
            failure: None,
        }
    }

    pub fn failed(episode_seed: u64, doe: DoESample, reason: String) -> Self {
        Self {
            failure: Some(reason),
            ..Self::new(f64::INFINITY, 0, None, episode_seed, doe)
        }
    }
}

fn ser_cqi<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn de_cqi<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}
