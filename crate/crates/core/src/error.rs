use thiserror::Error;

/// Errors raised while building or advancing a simulated world.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("inconsistent net topology: {0}")]
    Topology(String),
    #[error("invalid scene configuration: {0}")]
    Config(String),
    #[error("time step {dt} s outside (0, {max_dt}] s")]
    TimeStep { dt: f64, max_dt: f64 },
    #[error("launch is only allowed at t = 0 with a stowed net")]
    AlreadyLaunched,
    #[error("simulation blew up at physics step {step}")]
    Blowup { step: u64 },
    #[error("implicit step did not converge at physics step {step}")]
    NoConvergence { step: u64 },
}

/// Errors raised by the capture environment.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("DoE sample out of range: {0}")]
    InvalidDoe(String),
    #[error("invalid environment configuration: {0}")]
    Config(String),
    #[error("episode already complete; call reset first")]
    EpisodeComplete,
    #[error("no active episode; call reset first")]
    NotStarted,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Errors raised by the policy network and the PPO learner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("worker {worker} failed: {source}")]
    Worker {
        worker: usize,
        #[source]
        source: EnvError,
    },
}
