//! Physical parameters of the capture scene.
//!
//! Everything here is plain `f64` so it can round-trip through the JSON scene
//! file; the simulator converts to its scalar type when a world is built.

use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    /// Side length of the deployed square net, m.
    pub side_length: f64,
    /// Knots along one side; mesh length is `side_length / (nodes_per_side - 1)`.
    pub nodes_per_side: usize,
    /// Mass of all knots together, kg.
    pub total_mass: f64,
    pub thread_radius: f64,
    /// Contact radius of a lumped knot, m.
    pub node_radius: f64,
    /// Axial stiffness of one thread, N per unit strain.
    pub axial_stiffness: f64,
    /// Fraction of critical damping applied to each link.
    pub damping_ratio: f64,
    pub corner_mass: f64,
    pub corner_radius: f64,
    /// Rest length of the thread tying a corner mass to its corner knot, m.
    pub corner_link_length: f64,
    /// Scale of the stowed grid relative to the deployed one.
    pub stowed_fraction: f64,
    /// Stand-off of the stowed net from the chaser along +z, m.
    pub stowed_offset: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            side_length: 22.0,
            nodes_per_side: 17,
            total_mass: 100.0,
            thread_radius: 0.006,
            node_radius: 0.05,
            axial_stiffness: 5_000.0,
            damping_ratio: 0.1,
            corner_mass: 10.0,
            corner_radius: 0.1,
            corner_link_length: 1.0,
            stowed_fraction: 0.1,
            stowed_offset: 0.5,
        }
    }
}

impl NetConfig {
    pub fn mesh_length(&self) -> f64 {
        self.side_length / (self.nodes_per_side as f64 - 1.0)
    }
}

/// Main tether: a chain of lumped masses between the chaser and the net centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TetherConfig {
    pub enabled: bool,
    pub lumped_masses: usize,
    pub length: f64,
    pub total_mass: f64,
    pub axial_stiffness: f64,
    pub damping_ratio: f64,
}

impl Default for TetherConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            lumped_masses: 10,
            length: 50.0,
            total_mass: 5.0,
            axial_stiffness: 10_000.0,
            damping_ratio: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChaserConfig {
    pub mass: f64,
    /// A pinned chaser is an immovable anchor at the origin.
    pub pinned: bool,
}

impl Default for ChaserConfig {
    fn default() -> Self {
        Self {
            mass: 1_000.0,
            pinned: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetConfig {
    pub enabled: bool,
    pub half_extents: [f64; 3],
    pub mass: f64,
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            half_extents: [2.25, 1.25, 1.25],
            mass: 2_000.0,
        }
    }
}

/// Penalty contact between lumped masses and the target box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactConfig {
    /// Normal stiffness, N/m.
    pub stiffness: f64,
    /// Normal damping, N·s/m.
    pub damping: f64,
    /// Viscous tangential coefficient, N·s/m.
    pub tangential_viscosity: f64,
}

impl Default for ContactConfig {
    fn default() -> Self {
        Self {
            stiffness: 1.0e4,
            damping: 100.0,
            tangential_viscosity: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClosingConfig {
    /// Constant pull between adjacent drawstring entities, N.
    pub force: f64,
    /// Added to the sum of contact radii to get the lock distance, m.
    pub lock_tolerance: f64,
}

impl Default for ClosingConfig {
    fn default() -> Self {
        Self {
            force: 40.0,
            lock_tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// Largest step accepted by the integrator.
    pub max_dt: f64,
    pub scheme: Scheme,
}

/// Time-stepping scheme for the net particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Explicit semi-implicit Euler.
    #[default]
    SymplecticEuler,
    /// Implicit midpoint with discrete-gradient thread forces, solved by
    /// fixed-point iteration. Thread energy changes only by damping loss.
    EnergyMomentum,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.002,
            max_dt: 0.002,
            scheme: Scheme::SymplecticEuler,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub net: NetConfig,
    pub tether: TetherConfig,
    pub chaser: ChaserConfig,
    pub target: TargetConfig,
    pub contact: ContactConfig,
    pub closing: ClosingConfig,
    pub integrator: IntegratorConfig,
    /// Programmed corner-mass launch velocity, m/s.
    pub launch_velocity: [f64; 3],
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            net: NetConfig::default(),
            tether: TetherConfig::default(),
            chaser: ChaserConfig::default(),
            target: TargetConfig::default(),
            contact: ContactConfig::default(),
            closing: ClosingConfig::default(),
            integrator: IntegratorConfig::default(),
            launch_velocity: [3.30, 3.54, 7.16],
        }
    }
}

impl PhysicsConfig {
    /// Full-size 17 x 17 net integrated at 2 ms.
    pub fn full_scale() -> Self {
        Self::default()
    }

    /// Coarse 9 x 9 net integrated at 20 ms.
    pub fn desk_scale() -> Self {
        let mut cfg = Self::default();
        cfg.net.nodes_per_side = 9;
        cfg.net.axial_stiffness = 2_000.0;
        cfg.tether.axial_stiffness = 1_000.0;
        cfg.contact.stiffness = 2_000.0;
        cfg.contact.damping = 60.0;
        cfg.integrator = IntegratorConfig {
            dt: 0.02,
            max_dt: 0.02,
            ..IntegratorConfig::default()
        };
        cfg
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |msg: &str| Err(DynamicsError::Config(msg.to_string()));
        let n = &self.net;
        if n.nodes_per_side < 4 {
            return bad("net needs at least 4 nodes per side");
        }
        let positive = [
            ("net.side_length", n.side_length),
            ("net.total_mass", n.total_mass),
            ("net.node_radius", n.node_radius),
            ("net.axial_stiffness", n.axial_stiffness),
            ("net.corner_mass", n.corner_mass),
            ("net.corner_radius", n.corner_radius),
            ("net.corner_link_length", n.corner_link_length),
            ("net.stowed_fraction", n.stowed_fraction),
            ("chaser.mass", self.chaser.mass),
            ("target.mass", self.target.mass),
            ("integrator.dt", self.integrator.dt),
            ("integrator.max_dt", self.integrator.max_dt),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(DynamicsError::Config(format!("{name} must be positive")));
            }
        }
        if n.stowed_fraction > 1.0 {
            return bad("net.stowed_fraction must not exceed 1");
        }
        if self
            .target
            .half_extents
            .iter()
            .any(|h| !(h.is_finite() && *h > 0.0))
        {
            return bad("target.half_extents must be positive");
        }
        if self.tether.enabled
            && (self.tether.lumped_masses == 0
                || self.tether.length <= 0.0
                || self.tether.total_mass <= 0.0
                || self.tether.axial_stiffness <= 0.0)
        {
            return bad("enabled tether needs masses, length, mass and stiffness");
        }
        let non_negative = [
            n.damping_ratio,
            self.tether.damping_ratio,
            self.contact.stiffness,
            self.contact.damping,
            self.contact.tangential_viscosity,
            self.closing.force,
            self.closing.lock_tolerance,
            n.stowed_offset,
        ];
        if non_negative.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("damping, contact, closing and offset parameters must be non-negative");
        }
        if self.integrator.dt > self.integrator.max_dt {
            return Err(DynamicsError::TimeStep {
                dt: self.integrator.dt,
                max_dt: self.integrator.max_dt,
            });
        }
        Ok(())
    }
}
