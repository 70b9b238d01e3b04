//! World state and the semi-implicit integrator.
//!
//! All point masses (net knots, corner masses, tether masses and the chaser)
//! live in one flat particle array; [`ParticleLayout`] records which range is
//! which. The target is a separate rigid box.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::{UnitQuaternion, Vector3};

use super::config::{PhysicsConfig, Scheme};
use super::links::Link;
use super::target::{contact_force, ContactLaw, TargetSpec, TargetState};
use super::topology::{DrawstringEntity, NetTopology, CORNER_QUADRANTS, DRAWSTRING_LEN};
use crate::env::doe::{DoESample, DoeRanges};
use crate::error::DynamicsError;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticleLayout {
    pub nodes: Range<usize>,
    pub corners: Range<usize>,
    pub tether: Range<usize>,
    pub chaser: usize,
}

impl ParticleLayout {
    pub fn len(&self) -> usize {
        self.chaser + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Net knots followed by corner masses.
    pub fn net(&self) -> Range<usize> {
        self.nodes.start..self.corners.end
    }
}

/// Everything about a world that does not change while it is simulated.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldModel<T: Real> {
    pub topology: NetTopology<T>,
    pub layout: ParticleLayout,
    pub masses: Vec<T>,
    /// Contact radius per particle; zero disables contact.
    pub radii: Vec<T>,
    pub links: Vec<Link<T>>,
    /// Particle index of each drawstring entity, in loop order.
    pub drawstring: [usize; DRAWSTRING_LEN],
    /// Lock threshold of each adjacent drawstring pair.
    pub lock_distance: [T; DRAWSTRING_LEN],
    pub target: TargetSpec<T>,
    pub target_contact: bool,
    pub contact: ContactLaw<T>,
    pub closing_force: T,
    pub max_dt: T,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState<T: Real> {
    pub time: T,
    /// Number of physics steps taken so far.
    pub step_index: u64,
    pub positions: Vec<Vector3<T>>,
    pub velocities: Vec<Vector3<T>>,
    pub target: TargetState<T>,
    pub closing_active: bool,
    /// `locked[k]` covers drawstring entities `k` and `k + 1 (mod 12)`.
    pub locked: [bool; DRAWSTRING_LEN],
    pub launched: bool,
    pub chaser_pinned: bool,
    model: Arc<WorldModel<T>>,
    forces: Vec<Vector3<T>>,
}

/// Builds a world with the net stowed next to the chaser and the target placed per `doe`.
///
/// `doe` must lie inside the default initial-state ranges.
pub fn build_world<T: Real>(
    cfg: &PhysicsConfig,
    doe: &DoESample,
) -> Result<WorldState<T>, DynamicsError> {
    DoeRanges::default()
        .validate(doe)
        .map_err(|e| DynamicsError::Config(e.to_string()))?;
    build_world_unchecked(cfg, doe)
}

/// Same as [`build_world`] but accepts any finite target placement.
pub fn build_world_unchecked<T: Real>(
    cfg: &PhysicsConfig,
    doe: &DoESample,
) -> Result<WorldState<T>, DynamicsError> {
    cfg.validate()?;
    let topology = NetTopology::<T>::square(&cfg.net)?;
    let target = TargetSpec::from_config(&cfg.target, T::of(doe.distance))?;
    WorldState::assemble(cfg, topology, target, doe)
}

impl<T: Real> WorldState<T> {
    /// Lays out particles and threads for an explicit topology and target.
    pub fn assemble(
        cfg: &PhysicsConfig,
        topology: NetTopology<T>,
        target: TargetSpec<T>,
        doe: &DoESample,
    ) -> Result<Self, DynamicsError> {
        topology.validate()?;
        let n_nodes = topology.node_count();
        let n_tether = if cfg.tether.enabled {
            cfg.tether.lumped_masses
        } else {
            0
        };
        let layout = ParticleLayout {
            nodes: 0..n_nodes,
            corners: n_nodes..n_nodes + 4,
            tether: n_nodes + 4..n_nodes + 4 + n_tether,
            chaser: n_nodes + 4 + n_tether,
        };
        let total = layout.len();

        let scale = T::of(cfg.net.stowed_fraction);
        let offset = Vector3::new(T::zero(), T::zero(), T::of(cfg.net.stowed_offset));
        let mut positions = Vec::with_capacity(total);
        let mut masses = Vec::with_capacity(total);
        let mut radii = Vec::with_capacity(total);

        for p in &topology.design_positions {
            positions.push(p * scale + offset);
            masses.push(topology.node_mass);
            radii.push(T::of(cfg.net.node_radius));
        }
        let corner_link = T::of(cfg.net.corner_link_length);
        let diag = T::of(std::f64::consts::FRAC_1_SQRT_2);
        for (c, (sx, sy)) in topology.corner_indices.iter().zip(CORNER_QUADRANTS) {
            let out = Vector3::new(T::of(sx) * diag, T::of(sy) * diag, T::zero());
            positions.push((topology.design_positions[*c] + out * corner_link) * scale + offset);
            masses.push(T::of(cfg.net.corner_mass));
            radii.push(T::of(cfg.net.corner_radius));
        }
        let tether_mass = if n_tether > 0 {
            T::of(cfg.tether.total_mass / n_tether as f64)
        } else {
            T::zero()
        };
        for k in 0..n_tether {
            let frac = T::of((k + 1) as f64 / (n_tether + 1) as f64);
            positions.push(offset * frac);
            masses.push(tether_mass);
            radii.push(T::zero());
        }
        positions.push(Vector3::zeros());
        masses.push(T::of(cfg.chaser.mass));
        radii.push(T::zero());

        let mut links = Vec::with_capacity(topology.links.len() + 4 + n_tether + 1);
        for l in &topology.links {
            links.push(Link::thread(
                l.a,
                l.b,
                l.rest_length,
                topology.axial_stiffness,
                topology.damping_ratio,
                masses[l.a],
                masses[l.b],
            ));
        }
        for (k, c) in topology.corner_indices.iter().enumerate() {
            let p = layout.corners.start + k;
            links.push(Link::thread(
                *c,
                p,
                corner_link,
                topology.axial_stiffness,
                topology.damping_ratio,
                masses[*c],
                masses[p],
            ));
        }
        if n_tether > 0 {
            let seg = T::of(cfg.tether.length / (n_tether + 1) as f64);
            let ea = T::of(cfg.tether.axial_stiffness);
            let ratio = T::of(cfg.tether.damping_ratio);
            let mut chain = vec![layout.chaser];
            chain.extend(layout.tether.clone());
            chain.push(topology.centre_node());
            for w in chain.windows(2) {
                links.push(Link::thread(
                    w[0],
                    w[1],
                    seg,
                    ea,
                    ratio,
                    masses[w[0]],
                    masses[w[1]],
                ));
            }
        }

        let drawstring = topology.drawstring.map(|e| match e {
            DrawstringEntity::Node(i) => i,
            DrawstringEntity::Corner(c) => layout.corners.start + c,
        });
        let tol = T::of(cfg.closing.lock_tolerance);
        let lock_distance = std::array::from_fn(|k| {
            radii[drawstring[k]] + radii[drawstring[(k + 1) % DRAWSTRING_LEN]] + tol
        });

        let mut target_state =
            TargetState::at_rest(Vector3::new(T::zero(), T::zero(), T::of(doe.distance)));
        let [roll, pitch, yaw] = doe.orientation;
        target_state.orientation =
            UnitQuaternion::from_euler_angles(T::of(roll), T::of(pitch), T::of(yaw));
        target_state.angular_velocity = Vector3::new(
            T::of(doe.angular_velocity[0]),
            T::of(doe.angular_velocity[1]),
            T::of(doe.angular_velocity[2]),
        );

        let model = WorldModel {
            topology,
            layout,
            masses,
            radii,
            links,
            drawstring,
            lock_distance,
            target,
            target_contact: cfg.target.enabled,
            contact: ContactLaw::from_config(&cfg.contact),
            closing_force: T::of(cfg.closing.force),
            max_dt: T::of(cfg.integrator.max_dt),
            scheme: cfg.integrator.scheme,
        };
        let world = Self {
            time: T::zero(),
            step_index: 0,
            velocities: vec![Vector3::zeros(); total],
            positions,
            target: target_state,
            closing_active: false,
            locked: [false; DRAWSTRING_LEN],
            launched: false,
            chaser_pinned: cfg.chaser.pinned,
            forces: vec![Vector3::zeros(); total],
            model: Arc::new(model),
        };
        world.check_finite()?;
        Ok(world)
    }

    pub fn model(&self) -> &WorldModel<T> {
        &self.model
    }

    pub fn layout(&self) -> &ParticleLayout {
        &self.model.layout
    }

    pub fn node_positions(&self) -> &[Vector3<T>] {
        &self.positions[self.model.layout.nodes.clone()]
    }

    pub fn node_velocities(&self) -> &[Vector3<T>] {
        &self.velocities[self.model.layout.nodes.clone()]
    }

    pub fn corner_positions(&self) -> &[Vector3<T>] {
        &self.positions[self.model.layout.corners.clone()]
    }

    pub fn corner_velocities(&self) -> &[Vector3<T>] {
        &self.velocities[self.model.layout.corners.clone()]
    }

    pub fn tether_positions(&self) -> &[Vector3<T>] {
        &self.positions[self.model.layout.tether.clone()]
    }

    /// Positions of knots and corner masses, the bodies that make up the net.
    pub fn net_positions(&self) -> &[Vector3<T>] {
        &self.positions[self.model.layout.net()]
    }

    pub fn net_masses(&self) -> &[T] {
        &self.model.masses[self.model.layout.net()]
    }

    pub fn locked_count(&self) -> usize {
        self.locked.iter().filter(|l| **l).count()
    }

    /// Releases the chaser so it moves under tether loads.
    pub fn release_chaser(&mut self) {
        self.chaser_pinned = false;
    }

    fn inverse_mass(&self, i: usize) -> T {
        if self.chaser_pinned && i == self.model.layout.chaser {
            T::zero()
        } else {
            T::one() / self.model.masses[i]
        }
    }

    /// Gives every corner mass the programmed launch velocity, mirrored into its quadrant.
    pub fn launch(&mut self, velocity: &Vector3<T>) -> Result<(), DynamicsError> {
        if self.launched || self.step_index != 0 {
            return Err(DynamicsError::AlreadyLaunched);
        }
        for (k, (sx, sy)) in CORNER_QUADRANTS.iter().enumerate() {
            let i = self.model.layout.corners.start + k;
            self.velocities[i] =
                Vector3::new(T::of(*sx) * velocity.x, T::of(*sy) * velocity.y, velocity.z);
        }
        self.launched = true;
        Ok(())
    }

    /// Starts the drawstring; a second call is a no-op.
    pub fn activate_closing(&mut self) {
        self.closing_active = true;
    }

    /// Advances the world by one step of `dt` seconds with the configured scheme.
    pub fn step(&mut self, dt: T) -> Result<(), DynamicsError> {
        let max_dt = self.model.max_dt;
        if !(dt > T::zero()) || dt > max_dt * T::of(1.0 + 1e-12) {
            return Err(DynamicsError::TimeStep {
                dt: dt.as_f64(),
                max_dt: max_dt.as_f64(),
            });
        }
        let model = Arc::clone(&self.model);
        let (target_force, target_torque) = match model.scheme {
            Scheme::SymplecticEuler => {
                self.accumulate_forces(&model);
                let contact = self.accumulate_contacts(&model);
                for i in 0..self.positions.len() {
                    let inv = self.inverse_mass(i);
                    if inv == T::zero() {
                        self.velocities[i] = Vector3::zeros();
                        continue;
                    }
                    self.velocities[i] += self.forces[i] * (dt * inv);
                    self.positions[i] += self.velocities[i] * dt;
                }
                contact
            }
            Scheme::EnergyMomentum => self.midpoint_update(&model, dt)?,
        };
        self.target
            .integrate(&model.target, &target_force, &target_torque, dt);

        if self.closing_active {
            for k in 0..DRAWSTRING_LEN {
                if self.locked[k] {
                    continue;
                }
                let a = model.drawstring[k];
                let b = model.drawstring[(k + 1) % DRAWSTRING_LEN];
                if (self.positions[b] - self.positions[a]).norm() < model.lock_distance[k] {
                    self.locked[k] = true;
                }
            }
        }
        self.project_locks(&model);

        self.step_index += 1;
        self.time += dt;
        self.check_finite().map_err(|_| DynamicsError::Blowup {
            step: self.step_index,
        })
    }

    /// Implicit midpoint update of the particles. Contact forces are taken
    /// from the start of the step and held fixed during the iteration.
    fn midpoint_update(
        &mut self,
        model: &WorldModel<T>,
        dt: T,
    ) -> Result<(Vector3<T>, Vector3<T>), DynamicsError> {
        const MAX_ITERATIONS: usize = 200;
        for f in self.forces.iter_mut() {
            *f = Vector3::zeros();
        }
        let contact = self.accumulate_contacts(model);
        let external = self.forces.clone();
        let x0 = self.positions.clone();
        let v0 = self.velocities.clone();
        let n = x0.len();
        let scale = x0.iter().fold(T::one(), |a, x| a.max(x.amax()));
        let tol = T::default_epsilon().powf(T::of(0.75)) * scale;
        let half = T::of(0.5);
        let mut x1: Vec<Vector3<T>> = (0..n).map(|i| x0[i] + v0[i] * dt).collect();
        let mut v1 = v0.clone();
        let mut vmid = v0.clone();
        for _ in 0..MAX_ITERATIONS {
            let mut force = external.clone();
            for link in &model.links {
                let f = link.midpoint_force_on_a(
                    &x0[link.a],
                    &x0[link.b],
                    &x1[link.a],
                    &x1[link.b],
                    &vmid[link.a],
                    &vmid[link.b],
                );
                force[link.a] += f;
                force[link.b] -= f;
            }
            if self.closing_active {
                // Discrete gradient of a constant-magnitude pull, `force * length`.
                for k in 0..DRAWSTRING_LEN {
                    let a = model.drawstring[k];
                    let b = model.drawstring[(k + 1) % DRAWSTRING_LEN];
                    let (d0, d1) = (x0[b] - x0[a], x1[b] - x1[a]);
                    let sum = d0.norm() + d1.norm();
                    if sum > T::of(1e-12) {
                        let f = (d0 + d1) * (model.closing_force / sum);
                        force[a] += f;
                        force[b] -= f;
                    }
                }
            }
            let mut change = T::zero();
            for i in 0..n {
                let inv = self.inverse_mass(i);
                let v = if inv == T::zero() {
                    Vector3::zeros()
                } else {
                    v0[i] + force[i] * (dt * inv)
                };
                let x = if inv == T::zero() {
                    x0[i]
                } else {
                    x0[i] + (v0[i] + v) * (half * dt)
                };
                change = change.max((x - x1[i]).amax());
                v1[i] = v;
                vmid[i] = (v0[i] + v) * half;
                x1[i] = x;
            }
            if !change.is_finite() {
                break;
            }
            if change <= tol {
                self.positions = x1;
                self.velocities = v1;
                self.forces = force;
                return Ok(contact);
            }
        }
        Err(DynamicsError::NoConvergence {
            step: self.step_index,
        })
    }

    fn accumulate_forces(&mut self, model: &WorldModel<T>) {
        for f in self.forces.iter_mut() {
            *f = Vector3::zeros();
        }
        let (x, v) = (&self.positions, &self.velocities);
        for link in &model.links {
            let f = link.force_on_a(&x[link.a], &x[link.b], &v[link.a], &v[link.b]);
            self.forces[link.a] += f;
            self.forces[link.b] -= f;
        }
        if self.closing_active {
            for k in 0..DRAWSTRING_LEN {
                let a = model.drawstring[k];
                let b = model.drawstring[(k + 1) % DRAWSTRING_LEN];
                let d = x[b] - x[a];
                let len = d.norm();
                if len > T::of(1e-12) {
                    let f = d * (model.closing_force / len);
                    self.forces[a] += f;
                    self.forces[b] -= f;
                }
            }
        }
    }

    fn accumulate_contacts(&mut self, model: &WorldModel<T>) -> (Vector3<T>, Vector3<T>) {
        let mut force = Vector3::zeros();
        let mut torque = Vector3::zeros();
        if !model.target_contact {
            return (force, torque);
        }
        for i in 0..self.positions.len() {
            let r = model.radii[i];
            if r == T::zero() {
                continue;
            }
            if let Some(c) = contact_force(
                &self.positions[i],
                &self.velocities[i],
                r,
                &self.target,
                &model.target,
                &model.contact,
            ) {
                self.forces[i] += c.force;
                force -= c.force;
                torque -= (c.point - self.target.position).cross(&c.force);
            }
        }
        (force, torque)
    }

    /// Welds every group of locked drawstring entities into one point moving
    /// with the group's mass-weighted velocity.
    fn project_locks(&mut self, model: &WorldModel<T>) {
        if !self.locked.iter().any(|l| *l) {
            return;
        }
        let mut parent: [usize; DRAWSTRING_LEN] = std::array::from_fn(|k| k);
        fn root(parent: &mut [usize; DRAWSTRING_LEN], mut k: usize) -> usize {
            while parent[k] != k {
                parent[k] = parent[parent[k]];
                k = parent[k];
            }
            k
        }
        for k in 0..DRAWSTRING_LEN {
            if self.locked[k] {
                let a = root(&mut parent, k);
                let b = root(&mut parent, (k + 1) % DRAWSTRING_LEN);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        for group in 0..DRAWSTRING_LEN {
            let members: Vec<usize> = (0..DRAWSTRING_LEN)
                .filter(|&k| root(&mut parent, k) == group)
                .map(|k| model.drawstring[k])
                .collect();
            if members.len() < 2 {
                continue;
            }
            let mut mass = T::zero();
            let mut momentum = Vector3::zeros();
            let mut moment = Vector3::zeros();
            for &i in &members {
                let m = model.masses[i];
                mass += m;
                momentum += self.velocities[i] * m;
                moment += self.positions[i] * m;
            }
            let v = momentum / mass;
            let x = moment / mass;
            for &i in &members {
                self.velocities[i] = v;
                self.positions[i] = x;
            }
        }
    }

    fn check_finite(&self) -> Result<(), DynamicsError> {
        let finite = |v: &Vector3<T>| v.iter().all(|c| c.is_finite());
        let ok = self.positions.iter().all(finite)
            && self.velocities.iter().all(finite)
            && finite(&self.target.position)
            && finite(&self.target.velocity)
            && finite(&self.target.angular_velocity);
        if ok {
            Ok(())
        } else {
            Err(DynamicsError::Blowup {
                step: self.step_index,
            })
        }
    }

    /// Total linear momentum of every movable body.
    pub fn linear_momentum(&self) -> Vector3<T> {
        let mut p = self.target.velocity * self.model.target.mass;
        for i in 0..self.positions.len() {
            if self.inverse_mass(i) > T::zero() {
                p += self.velocities[i] * self.model.masses[i];
            }
        }
        p
    }

    pub fn kinetic_energy(&self) -> T {
        let half = T::of(0.5);
        let mut e = self.target.kinetic_energy(&self.model.target);
        for i in 0..self.positions.len() {
            if self.inverse_mass(i) > T::zero() {
                e += half * self.model.masses[i] * self.velocities[i].norm_squared();
            }
        }
        e
    }

    /// Elastic energy in the threads plus penalty energy of active contacts.
    pub fn potential_energy(&self) -> T {
        let x = &self.positions;
        let mut e = T::zero();
        for l in &self.model.links {
            e += l.energy(&x[l.a], &x[l.b]);
        }
        if self.model.target_contact {
            let half = T::of(0.5);
            for (p, &r) in x.iter().zip(&self.model.radii) {
                if r == T::zero() {
                    continue;
                }
                let (_, _, signed) =
                    super::target::box_closest(p, &self.target, &self.model.target.half_extents);
                let depth = r - signed;
                if depth > T::zero() {
                    e += half * self.model.contact.stiffness * depth * depth;
                }
            }
        }
        e
    }

    pub fn mechanical_energy(&self) -> T {
        self.kinetic_energy() + self.potential_energy()
    }

    /// Largest step for which the explicit update of the stiffest particle stays
    /// stable, from a Gershgorin bound on the mass-normalised stiffness.
    pub fn stability_bound(&self) -> T {
        let m = &self.model;
        let mut row = vec![T::zero(); self.positions.len()];
        for l in &m.links {
            let (ma, mb) = (m.masses[l.a], m.masses[l.b]);
            let cross = l.stiffness / (ma * mb).sqrt();
            row[l.a] += l.stiffness / ma + cross;
            row[l.b] += l.stiffness / mb + cross;
        }
        if m.target_contact {
            for (i, r) in m.radii.iter().enumerate() {
                if *r > T::zero() {
                    row[i] += m.contact.stiffness / m.masses[i];
                }
            }
        }
        let omega = row.into_iter().fold(T::zero(), |a, b| a.max(b)).sqrt();
        T::of(2.0) / omega
    }
}
