//! Square net layout: knots, threads, corner masses and the drawstring loop.

use nalgebra::Vector3;

use super::config::NetConfig;
use crate::error::DynamicsError;
use crate::scalar::Real;

/// Number of entities threaded by the drawstring (8 perimeter knots + 4 corner masses).
pub const DRAWSTRING_LEN: usize = 12;

/// Quadrant signs of the corner masses, in corner-index order.
pub const CORNER_QUADRANTS: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

/// A body the drawstring passes through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawstringEntity {
    Node(usize),
    Corner(usize),
}

/// A thread between two knots with its unstretched length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec<T> {
    pub a: usize,
    pub b: usize,
    pub rest_length: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetTopology<T: Real> {
    pub nodes_per_side: usize,
    pub node_mass: T,
    /// Deployed (fully open) knot positions in the net plane, centred at the origin.
    pub design_positions: Vec<Vector3<T>>,
    pub links: Vec<LinkSpec<T>>,
    /// Corner knots in quadrant order (+,+), (+,-), (-,+), (-,-).
    pub corner_indices: [usize; 4],
    pub drawstring: [DrawstringEntity; DRAWSTRING_LEN],
    pub thread_radius: T,
    /// N per unit strain.
    pub axial_stiffness: T,
    pub damping_ratio: T,
}

impl<T: Real> NetTopology<T> {
    /// Square grid with `nodes_per_side` knots per side.
    pub fn square(cfg: &NetConfig) -> Result<Self, DynamicsError> {
        let n = cfg.nodes_per_side;
        if n < 4 {
            return Err(DynamicsError::Topology(format!(
                "need at least 4 nodes per side, got {n}"
            )));
        }
        let mesh = T::of(cfg.mesh_length());
        let half = T::of((n - 1) as f64 / 2.0);
        let idx = |i: usize, j: usize| i * n + j;

        let mut design_positions = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                design_positions.push(Vector3::new(
                    (T::of_usize(j) - half) * mesh,
                    (T::of_usize(i) - half) * mesh,
                    T::zero(),
                ));
            }
        }

        let mut links = Vec::with_capacity(2 * n * (n - 1));
        for i in 0..n {
            for j in 0..n {
                if j + 1 < n {
                    links.push(LinkSpec {
                        a: idx(i, j),
                        b: idx(i, j + 1),
                        rest_length: mesh,
                    });
                }
                if i + 1 < n {
                    links.push(LinkSpec {
                        a: idx(i, j),
                        b: idx(i + 1, j),
                        rest_length: mesh,
                    });
                }
            }
        }

        // x grows with j, y grows with i.
        let last = n - 1;
        let corner_indices = [idx(last, last), idx(0, last), idx(last, 0), idx(0, 0)];

        // Two intermediate perimeter knots per side at roughly one and two thirds.
        let a = ((last as f64) / 3.0).round() as usize;
        let b = ((2 * last) as f64 / 3.0).round() as usize;
        use DrawstringEntity::{Corner, Node};
        let drawstring = [
            Corner(3),
            Node(idx(0, a)),
            Node(idx(0, b)),
            Corner(1),
            Node(idx(a, last)),
            Node(idx(b, last)),
            Corner(0),
            Node(idx(last, b)),
            Node(idx(last, a)),
            Corner(2),
            Node(idx(b, 0)),
            Node(idx(a, 0)),
        ];

        let topo = Self {
            nodes_per_side: n,
            node_mass: T::of(cfg.total_mass / (n * n) as f64),
            design_positions,
            links,
            corner_indices,
            drawstring,
            thread_radius: T::of(cfg.thread_radius),
            axial_stiffness: T::of(cfg.axial_stiffness),
            damping_ratio: T::of(cfg.damping_ratio),
        };
        topo.validate()?;
        Ok(topo)
    }

    pub fn node_count(&self) -> usize {
        self.design_positions.len()
    }

    pub fn total_mass(&self) -> T {
        self.node_mass * T::of_usize(self.node_count())
    }

    /// Checks index ranges, rest lengths and the drawstring loop.
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let n = self.node_count();
        if n != self.nodes_per_side * self.nodes_per_side {
            return Err(DynamicsError::Topology(format!(
                "{n} nodes for a {0}x{0} grid",
                self.nodes_per_side
            )));
        }
        for (k, link) in self.links.iter().enumerate() {
            if link.a >= n || link.b >= n || link.a == link.b {
                return Err(DynamicsError::Topology(format!(
                    "link {k} references node pair ({}, {}) with {n} nodes",
                    link.a, link.b
                )));
            }
            let d = (self.design_positions[link.b] - self.design_positions[link.a]).norm();
            let tol = T::of(1e-9) * (T::one() + d);
            if (d - link.rest_length).abs() > tol {
                return Err(DynamicsError::Topology(format!(
                    "link {k} rest length differs from its design span"
                )));
            }
        }
        if self.corner_indices.iter().any(|&c| c >= n) {
            return Err(DynamicsError::Topology("corner index out of range".into()));
        }
        let mut seen = Vec::with_capacity(DRAWSTRING_LEN);
        for e in self.drawstring {
            match e {
                DrawstringEntity::Node(i) if i >= n => {
                    return Err(DynamicsError::Topology(format!(
                        "drawstring node {i} out of range"
                    )))
                }
                DrawstringEntity::Corner(c) if c >= 4 => {
                    return Err(DynamicsError::Topology(format!(
                        "drawstring corner {c} out of range"
                    )))
                }
                _ => {}
            }
            if seen.contains(&e) {
                return Err(DynamicsError::Topology(
                    "drawstring visits an entity twice".into(),
                ));
            }
            seen.push(e);
        }
        if !(self.node_mass > T::zero()) {
            return Err(DynamicsError::Topology("node mass must be positive".into()));
        }
        Ok(())
    }

    /// The 12 adjacent drawstring pairs of the closed loop.
    pub fn drawstring_pairs(&self) -> [(DrawstringEntity, DrawstringEntity); DRAWSTRING_LEN] {
        std::array::from_fn(|k| {
            (
                self.drawstring[k],
                self.drawstring[(k + 1) % DRAWSTRING_LEN],
            )
        })
    }

    /// Index of the knot closest to the grid centre (tether attachment).
    pub fn centre_node(&self) -> usize {
        let m = self.nodes_per_side / 2;
        m * self.nodes_per_side + m
    }
}
