//! Tether-net space-debris capture: lumped-parameter net dynamics, a
//! reward-shaped closing-timing environment, a PPO actor-critic trainer and a
//! Monte Carlo reliability evaluator.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the CLI uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` deliberately treats NaN as invalid.

pub mod config;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod learner;
pub mod metrics;
pub mod reliability;
pub mod scalar;

pub use config::{config_hash, SceneConfig};
pub use error::{DynamicsError, EnvError, LearnerError};
pub use scalar::Real;

pub type World = dynamics::WorldState<f64>;
pub type Target = dynamics::TargetSpec<f64>;
pub type Snapshot = metrics::NetGeometrySnapshot<f64>;
pub type Env = env::TetherNetEnv<f64>;
pub type Policy = learner::ActorCritic<f64>;
