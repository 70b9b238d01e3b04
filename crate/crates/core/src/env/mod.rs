//! The capture MDP: observations, noise, shaped reward, stage schedule and
//! initial-state sampling, plus a small closing-timing toy task.

pub mod capture;
pub mod coefficients;
pub mod doe;
pub mod noise;
pub mod observation;
pub mod reward;
pub mod toy;

pub use capture::{EnvConfig, StepInfo, StepOutcome, TetherNetEnv};
pub use coefficients::{stage_coefficients, RewardCoefficients, StageSchedule};
pub use doe::{DoESample, DoeRanges};
pub use noise::NoiseModel;
pub use observation::{Observation, OBSERVATION_DIM};
pub use reward::{end_reward, premature_closing, step_reward, PrematureRule};
pub use toy::ClosingTimingToy;

use crate::error::EnvError;
use crate::metrics::CaptureReport;
use crate::scalar::Real;

/// Action index that sends the closing signal.
pub const CLOSE: usize = 1;

/// Bookkeeping of a finished episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub n_steps: usize,
    /// Sum of all rewards handed to the learner, terminal reward included.
    pub total_reward: f64,
    /// Per-episode score for logs: `total_reward / n_steps` for the capture task.
    pub score: f64,
    pub t_close: Option<f64>,
    pub report: Option<CaptureReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    /// Normalised observation after the step; the first observation of the next episode is not included.
    pub observation: Vec<T>,
    pub reward: T,
    pub done: bool,
    pub episode: Option<EpisodeSummary>,
}

/// Discrete-action episodic environment driven by the learner.
pub trait Environment<T: Real>: Send {
    fn observation_dim(&self) -> usize;
    fn n_actions(&self) -> usize {
        2
    }
    /// Starts a new episode with internally sampled initial conditions.
    fn reset(&mut self) -> Result<Vec<T>, EnvError>;
    fn step(&mut self, action: usize) -> Result<Transition<T>, EnvError>;
    /// Total environment steps taken by all workers; selects reward stages.
    fn set_global_step(&mut self, _global_step: u64) {}
}
