//! Parallel rollout collection and the PPO training loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::buffer::RolloutBuffer;
use super::mlp::{ActorCritic, MlpShape};
use super::ppo::{ppo_update, LossWeights, Surrogate, UpdateSettings, UpdateStats};
use crate::env::Environment;
use crate::error::{EnvError, LearnerError};
use crate::scalar::Real;

/// Width of the moving window over finished episodes.
pub const MOVING_AVERAGE_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub total_timesteps: u64,
    pub learning_rate: f64,
    pub gamma: f64,
    pub clip_range: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub n_workers: usize,
    /// Steps per worker between two updates.
    pub n_steps: usize,
    pub gae_lambda: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub hidden: Vec<usize>,
    pub normalize_advantages: bool,
    pub surrogate: Surrogate,
    /// Seeds the network initialisation, action sampling and minibatch shuffling.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            total_timesteps: 1_500_000,
            learning_rate: 2.5e-4,
            gamma: 0.999,
            clip_range: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            n_workers: 30,
            n_steps: 128,
            gae_lambda: 0.95,
            epochs: 4,
            minibatches: 4,
            hidden: vec![64, 64],
            normalize_advantages: true,
            surrogate: Surrogate::Clipped,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |m: &str| Err(LearnerError::Config(m.to_string()));
        if self.n_workers == 0 || self.n_steps == 0 || self.epochs == 0 || self.minibatches == 0 {
            return bad("workers, steps, epochs and minibatches must be at least 1");
        }
        if self.minibatches > self.n_workers * self.n_steps {
            return bad("more minibatches than samples per update");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma and lambda must lie in [0, 1]");
        }
        if !(self.clip_range > 0.0) || !(self.max_grad_norm > 0.0) {
            return bad("clip range and gradient norm bound must be positive");
        }
        if !(self.entropy_coef >= 0.0) || !(self.value_coef >= 0.0) {
            return bad("loss coefficients must be non-negative");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers need at least one unit");
        }
        Ok(())
    }

    pub fn samples_per_update(&self) -> u64 {
        (self.n_workers * self.n_steps) as u64
    }

    pub fn update_settings(&self) -> UpdateSettings {
        UpdateSettings {
            epochs: self.epochs,
            minibatches: self.minibatches,
            max_grad_norm: self.max_grad_norm,
            normalize_advantages: self.normalize_advantages,
            weights: LossWeights {
                clip_range: self.clip_range,
                entropy_coef: self.entropy_coef,
                value_coef: self.value_coef,
                surrogate: self.surrogate,
            },
        }
    }
}

/// One finished training episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// Index in the merged, deterministic episode order.
    pub episode: usize,
    pub worker: usize,
    /// Global environment steps when the episode ended.
    pub global_step: u64,
    pub n_steps: usize,
    pub score: f64,
    /// Mean score of this and up to nine preceding episodes.
    pub moving_average: f64,
    pub total_reward: f64,
    pub t_close: Option<f64>,
    pub cqi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub update: usize,
    pub global_step: u64,
    pub episodes: usize,
    /// Moving average of the most recent episode, if any has finished.
    pub moving_average: Option<f64>,
    pub stats: UpdateStats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerStats {
    pub episodes: usize,
    pub steps: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeRecord>,
    pub updates: Vec<UpdateReport>,
    pub workers: Vec<WorkerStats>,
}

impl TrainingLog {
    fn record(&mut self, worker: usize, global_step: u64, s: &crate::env::EpisodeSummary) {
        let episode = self.episodes.len();
        let lo = (episode + 1).saturating_sub(MOVING_AVERAGE_WINDOW);
        let window = self.episodes[lo..]
            .iter()
            .map(|e| e.score)
            .chain(std::iter::once(s.score));
        let n = (episode + 1 - lo) as f64;
        let moving_average = window.sum::<f64>() / n;
        self.episodes.push(EpisodeRecord {
            episode,
            worker,
            global_step,
            n_steps: s.n_steps,
            score: s.score,
            moving_average,
            total_reward: s.total_reward,
            t_close: s.t_close,
            cqi: s.report.as_ref().map(|r| r.cqi),
        });
        self.workers[worker].episodes += 1;
    }

    /// Mean score of the first `n` episodes.
    pub fn first_mean(&self, n: usize) -> Option<f64> {
        let k = n.min(self.episodes.len());
        (k > 0).then(|| self.episodes[..k].iter().map(|e| e.score).sum::<f64>() / k as f64)
    }

    /// Mean score of the last `n` episodes.
    pub fn last_mean(&self, n: usize) -> Option<f64> {
        let k = n.min(self.episodes.len());
        (k > 0).then(|| {
            self.episodes[self.episodes.len() - k..]
                .iter()
                .map(|e| e.score)
                .sum::<f64>()
                / k as f64
        })
    }
}

struct Worker<T, E> {
    env: E,
    rng: ChaCha8Rng,
    obs: Vec<T>,
}

struct Segment<T> {
    buffer: RolloutBuffer<T>,
    /// (step within the rollout, summary) of every episode finished in the segment.
    finished: Vec<(usize, crate::env::EpisodeSummary)>,
}

/// Seed of the action-sampling stream of `worker`.
fn worker_seed(seed: u64, worker: usize) -> u64 {
    seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(worker as u64 + 1))
}

fn collect<T: Real, E: Environment<T>>(
    w: &mut Worker<T, E>,
    net: &ActorCritic<T>,
    n_steps: usize,
    gamma: T,
    lambda: T,
) -> Result<Segment<T>, EnvError> {
    let mut buffer = RolloutBuffer::new(net.shape.input);
    let mut finished = Vec::new();
    let mut obs = std::mem::take(&mut w.obs);
    for t in 0..n_steps {
        let (dist, value) = net
            .policy(&obs)
            .map_err(|e| EnvError::Config(e.to_string()))?;
        let action = dist.sample(&mut w.rng);
        let tr = w.env.step(action)?;
        buffer.push(
            &obs,
            action,
            dist.log_prob(action),
            value,
            tr.reward,
            tr.done,
        );
        if let Some(summary) = tr.episode {
            finished.push((t, summary));
        }
        obs = if tr.done {
            w.env.reset()?
        } else {
            tr.observation
        };
    }
    let last_value = net
        .policy(&obs)
        .map_err(|e| EnvError::Config(e.to_string()))?
        .1;
    buffer.finish_segment(last_value, gamma, lambda);
    w.obs = obs;
    Ok(Segment { buffer, finished })
}

/// Final state of a training run. `error` is set when the run stopped early on a failure;
/// the parameters are then those of the last completed update.
#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: ActorCritic<T>,
    pub log: TrainingLog,
    pub global_step: u64,
    pub error: Option<LearnerError>,
}

/// Trains a fresh network on environments built by `make_env(worker_index)`.
///
/// `on_update` runs after every update and may stop training by returning `false`.
pub fn train<T, E, F, C>(
    make_env: F,
    cfg: &TrainConfig,
    mut on_update: C,
) -> Result<TrainOutcome<T>, LearnerError>
where
    T: Real,
    E: Environment<T>,
    F: Fn(usize) -> Result<E, EnvError>,
    C: FnMut(&UpdateReport, &ActorCritic<T>, &TrainingLog) -> bool,
{
    cfg.validate()?;
    let mut workers = Vec::with_capacity(cfg.n_workers);
    for k in 0..cfg.n_workers {
        let mut env = make_env(k).map_err(|source| LearnerError::Worker { worker: k, source })?;
        let obs = env
            .reset()
            .map_err(|source| LearnerError::Worker { worker: k, source })?;
        workers.push(Worker {
            env,
            rng: ChaCha8Rng::seed_from_u64(worker_seed(cfg.seed, k)),
            obs,
        });
    }
    let obs_dim = workers[0].obs.len();
    let n_actions = workers[0].env.n_actions();
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = ActorCritic::<T>::orthogonal(
        MlpShape::new(obs_dim, cfg.hidden.clone(), n_actions),
        &mut init_rng,
    );
    let mut optimiser = Adam::new(net.n_params(), cfg.learning_rate);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(init_rng.random());
    let settings = cfg.update_settings();
    let (gamma, lambda) = (T::of(cfg.gamma), T::of(cfg.gae_lambda));

    let mut log = TrainingLog {
        workers: vec![WorkerStats::default(); cfg.n_workers],
        ..TrainingLog::default()
    };
    let mut global_step = 0u64;
    let mut update = 0;
    loop {
        // The last rollout is shortened so the step budget is never exceeded.
        let remaining =
            (cfg.total_timesteps.saturating_sub(global_step) / cfg.n_workers as u64) as usize;
        let len = cfg.n_steps.min(remaining);
        if len == 0 || len * cfg.n_workers < cfg.minibatches {
            break;
        }
        for w in workers.iter_mut() {
            w.env.set_global_step(global_step);
        }
        let segments: Vec<Result<Segment<T>, EnvError>> = workers
            .par_iter_mut()
            .map(|w| collect(w, &net, len, gamma, lambda))
            .collect();

        let mut buffer = RolloutBuffer::new(obs_dim);
        let mut finished = Vec::new();
        for (k, seg) in segments.into_iter().enumerate() {
            match seg {
                Ok(seg) => {
                    buffer.append(seg.buffer);
                    finished.extend(seg.finished.into_iter().map(|(t, s)| (t, k, s)));
                }
                Err(source) => {
                    return Ok(TrainOutcome {
                        params: net,
                        log,
                        global_step,
                        error: Some(LearnerError::Worker { worker: k, source }),
                    });
                }
            }
        }
        finished.sort_by_key(|(t, k, _)| (*t, *k));
        for (t, k, s) in &finished {
            log.record(*k, global_step + ((t + 1) * cfg.n_workers) as u64, s);
        }
        for s in log.workers.iter_mut() {
            s.steps += len as u64;
        }
        global_step += (len * cfg.n_workers) as u64;

        let stats = match ppo_update(
            &mut net,
            &mut optimiser,
            &mut buffer,
            &settings,
            &mut shuffle_rng,
        ) {
            Ok(s) => s,
            Err(e) => {
                return Ok(TrainOutcome {
                    params: net,
                    log,
                    global_step,
                    error: Some(e),
                })
            }
        };
        update += 1;
        let report = UpdateReport {
            update,
            global_step,
            episodes: log.episodes.len(),
            moving_average: log.episodes.last().map(|e| e.moving_average),
            stats,
        };
        log.updates.push(report.clone());
        if !on_update(&report, &net, &log) {
            break;
        }
    }
    Ok(TrainOutcome {
        params: net,
        log,
        global_step,
        error: None,
    })
}

/// Mean episodic reward of the greedy policy over `episodes` fresh episodes.
pub fn greedy_score<T: Real, E: Environment<T>>(
    net: &ActorCritic<T>,
    env: &mut E,
    episodes: usize,
) -> Result<T, LearnerError> {
    let worker = |source| LearnerError::Worker { worker: 0, source };
    let mut total = T::zero();
    for _ in 0..episodes {
        let mut obs = env.reset().map_err(worker)?;
        loop {
            let action = net.policy(&obs)?.0.mode();
            let tr = env.step(action).map_err(worker)?;
            total += tr.reward;
            if tr.done {
                break;
            }
            obs = tr.observation;
        }
    }
    Ok(total / T::of_usize(episodes.max(1)))
}
