//! Lumped-parameter simulation of the net, corner masses, main tether,
//! chaser, rigid target and drawstring closing mechanism.

pub mod config;
pub mod links;
pub mod target;
pub mod topology;
pub mod trajectory;
pub mod world;

pub use config::{PhysicsConfig, Scheme};
pub use links::Link;
pub use target::{contact_force, Contact, ContactLaw, TargetSpec, TargetState};
pub use topology::{DrawstringEntity, NetTopology, DRAWSTRING_LEN};
pub use trajectory::TrajectoryRecord;
pub use world::{build_world, build_world_unchecked, ParticleLayout, WorldModel, WorldState};
