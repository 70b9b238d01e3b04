//! Rigid box target and its penalty contact with lumped masses.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use super::config::{ContactConfig, TargetConfig};
use crate::error::DynamicsError;
use crate::scalar::Real;

/// Static description of the debris target.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec<T: Real> {
    pub half_extents: Vector3<T>,
    pub mass: T,
    /// Body-frame inertia of a uniform-density box.
    pub inertia: Matrix3<T>,
    /// Reference volume V_t, m^3.
    pub volume: T,
    /// Reference surface area S_t, m^2.
    pub area: T,
    /// Distance q_t of the target centre from the chaser at episode start, m.
    pub reference_distance: T,
}

impl<T: Real> TargetSpec<T> {
    pub fn new(
        half_extents: Vector3<T>,
        mass: T,
        reference_distance: T,
    ) -> Result<Self, DynamicsError> {
        if half_extents.iter().any(|h| !(*h > T::zero())) || !(mass > T::zero()) {
            return Err(DynamicsError::Config(
                "target needs positive half extents and mass".into(),
            ));
        }
        let (a, b, c) = (half_extents.x, half_extents.y, half_extents.z);
        let third = mass / T::of(3.0);
        let inertia = Matrix3::from_diagonal(&Vector3::new(
            third * (b * b + c * c),
            third * (a * a + c * c),
            third * (a * a + b * b),
        ));
        let volume = T::of(8.0) * a * b * c;
        let area = T::of(8.0) * (a * b + b * c + a * c);
        Ok(Self {
            half_extents,
            mass,
            inertia,
            volume,
            area,
            reference_distance,
        })
    }

    pub fn from_config(cfg: &TargetConfig, reference_distance: T) -> Result<Self, DynamicsError> {
        let h = cfg.half_extents;
        Self::new(
            Vector3::new(T::of(h[0]), T::of(h[1]), T::of(h[2])),
            T::of(cfg.mass),
            reference_distance,
        )
    }
}

/// Pose and twist of the target; angular velocity is expressed in the world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetState<T: Real> {
    pub position: Vector3<T>,
    pub orientation: UnitQuaternion<T>,
    pub velocity: Vector3<T>,
    pub angular_velocity: Vector3<T>,
}

impl<T: Real> TargetState<T> {
    pub fn at_rest(position: Vector3<T>) -> Self {
        Self {
            position,
            orientation: UnitQuaternion::identity(),
            velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
        }
    }

    pub fn world_inertia(&self, spec: &TargetSpec<T>) -> Matrix3<T> {
        let r = self.orientation.to_rotation_matrix().into_inner();
        r * spec.inertia * r.transpose()
    }

    pub fn angular_momentum(&self, spec: &TargetSpec<T>) -> Vector3<T> {
        self.world_inertia(spec) * self.angular_velocity
    }

    pub fn kinetic_energy(&self, spec: &TargetSpec<T>) -> T {
        let half = T::of(0.5);
        half * spec.mass * self.velocity.norm_squared()
            + half * self.angular_velocity.dot(&self.angular_momentum(spec))
    }

    /// Semi-implicit rigid-body step under a net force and torque about the centre.
    pub fn integrate(
        &mut self,
        spec: &TargetSpec<T>,
        force: &Vector3<T>,
        torque: &Vector3<T>,
        dt: T,
    ) {
        self.velocity += force * (dt / spec.mass);
        let inertia = self.world_inertia(spec);
        let momentum = inertia * self.angular_velocity;
        let gyro = self.angular_velocity.cross(&momentum);
        if let Some(inv) = inertia.try_inverse() {
            self.angular_velocity += inv * (torque - gyro) * dt;
        }
        self.position += self.velocity * dt;
        let spin = UnitQuaternion::from_scaled_axis(self.angular_velocity * dt);
        self.orientation = UnitQuaternion::new_normalize((spin * self.orientation).into_inner());
    }

    /// Velocity of a material point of the target located at `point`.
    pub fn point_velocity(&self, point: &Vector3<T>) -> Vector3<T> {
        self.velocity + self.angular_velocity.cross(&(point - self.position))
    }
}

/// Penalty contact coefficients in the simulation scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactLaw<T> {
    pub stiffness: T,
    pub damping: T,
    pub tangential_viscosity: T,
}

impl<T: Real> ContactLaw<T> {
    pub fn from_config(cfg: &ContactConfig) -> Self {
        Self {
            stiffness: T::of(cfg.stiffness),
            damping: T::of(cfg.damping),
            tangential_viscosity: T::of(cfg.tangential_viscosity),
        }
    }
}

/// Result of one sphere/box contact evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact<T: Real> {
    /// Force on the sphere; the target receives the opposite force at `point`.
    pub force: Vector3<T>,
    pub point: Vector3<T>,
    pub normal: Vector3<T>,
    pub depth: T,
}

/// Closest surface point and outward normal of an oriented box to a world point.
///
/// Returns `(surface_point, normal, signed_distance)` where the distance is
/// negative inside the box.
pub fn box_closest<T: Real>(
    point: &Vector3<T>,
    pose: &TargetState<T>,
    half: &Vector3<T>,
) -> (Vector3<T>, Vector3<T>, T) {
    let local = pose
        .orientation
        .inverse_transform_vector(&(point - pose.position));
    let clamped = Vector3::from_fn(|i, _| local[i].clamp(-half[i], half[i]));
    let diff = local - clamped;
    let dist = diff.norm();
    let (surface, normal, signed) = if dist > T::zero() {
        (clamped, diff / dist, dist)
    } else {
        // Inside: push out through the nearest face.
        let mut axis = 0;
        let mut best = half[0] - local[0].abs();
        for i in 1..3 {
            let gap = half[i] - local[i].abs();
            if gap < best {
                best = gap;
                axis = i;
            }
        }
        let sign = if local[axis] >= T::zero() {
            T::one()
        } else {
            -T::one()
        };
        let mut normal = Vector3::zeros();
        normal[axis] = sign;
        let mut surface = local;
        surface[axis] = sign * half[axis];
        (surface, normal, -best)
    };
    (
        pose.position + pose.orientation.transform_vector(&surface),
        pose.orientation.transform_vector(&normal),
        signed,
    )
}

/// Penalty force on a sphere of `radius` touching the target box.
///
/// Normal part `k·δ + c·δ̇` (never adhesive), tangential part `-μ·v_t`;
/// `None` when the sphere does not penetrate.
pub fn contact_force<T: Real>(
    position: &Vector3<T>,
    velocity: &Vector3<T>,
    radius: T,
    pose: &TargetState<T>,
    spec: &TargetSpec<T>,
    law: &ContactLaw<T>,
) -> Option<Contact<T>> {
    let (surface, normal, signed) = box_closest(position, pose, &spec.half_extents);
    let depth = radius - signed;
    if !(depth > T::zero()) {
        return None;
    }
    let relative = velocity - pose.point_velocity(&surface);
    let normal_speed = relative.dot(&normal);
    let normal_force = (law.stiffness * depth - law.damping * normal_speed).max(T::zero());
    let tangential = relative - normal * normal_speed;
    let force = normal * normal_force - tangential * law.tangential_viscosity;
    Some(Contact {
        force,
        point: surface,
        normal,
        depth,
    })
}
