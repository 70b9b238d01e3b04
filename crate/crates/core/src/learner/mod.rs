//! PPO actor-critic learner: network, optimiser, advantage estimation,
//! clipped-surrogate update and the parallel training loop.

pub mod adam;
pub mod buffer;
pub mod checkpoint;
pub mod gae;
pub mod mlp;
pub mod ppo;
pub mod train;

pub use adam::Adam;
pub use buffer::RolloutBuffer;
pub use checkpoint::Checkpoint;
pub use gae::compute_gae;
pub use mlp::{ActionDistribution, ActorCritic, MlpShape};
pub use ppo::{loss_and_gradient, ppo_update, LossWeights, Surrogate, UpdateSettings, UpdateStats};
pub use train::{
    greedy_score, train, EpisodeRecord, TrainConfig, TrainOutcome, TrainingLog, UpdateReport,
    WorkerStats,
};
