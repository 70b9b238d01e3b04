//! JSON-Lines trajectory records.

use serde::{Deserialize, Serialize};

use super::world::WorldState;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub position: [f64; 3],
    /// Unit quaternion `[w, x, y, z]`.
    pub orientation: [f64; 4],
    pub velocity: [f64; 3],
    pub angular_velocity: [f64; 3],
}

/// One sampled instant of a rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub time: f64,
    pub step: usize,
    pub closing_active: bool,
    pub locked_pairs: usize,
    pub corners: Vec<[f64; 3]>,
    pub target: TargetRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
    /// Knot positions; present only on decimated records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tether: Option<Vec<[f64; 3]>>,
}

fn arr<T: Real>(v: &nalgebra::Vector3<T>) -> [f64; 3] {
    [v.x.as_f64(), v.y.as_f64(), v.z.as_f64()]
}

impl TrajectoryRecord {
    pub fn capture<T: Real>(world: &WorldState<T>, step: usize, with_nodes: bool) -> Self {
        let q = world.target.orientation.quaternion();
        Self {
            time: world.time.as_f64(),
            step,
            closing_active: world.closing_active,
            locked_pairs: world.locked_count(),
            corners: world.corner_positions().iter().map(arr).collect(),
            target: TargetRecord {
                position: arr(&world.target.position),
                orientation: [q.w.as_f64(), q.i.as_f64(), q.j.as_f64(), q.k.as_f64()],
                velocity: arr(&world.target.velocity),
                angular_velocity: arr(&world.target.angular_velocity),
            },
            reward: None,
            nodes: with_nodes.then(|| world.node_positions().iter().map(arr).collect()),
            tether: with_nodes.then(|| world.tether_positions().iter().map(arr).collect()),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trajectory record serialises")
    }
}
