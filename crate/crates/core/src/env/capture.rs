//! Episode lifecycle of the tether-net closing task.

use nalgebra::Vector3;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::coefficients::StageSchedule;
use super::doe::{DoESample, DoeRanges};
use super::noise::{sample3, NoiseModel};
use super::observation::{Observation, OBSERVATION_DIM};
use super::reward::{end_reward, step_reward, PrematureRule};
use super::{Environment, EpisodeSummary, Transition, CLOSE};
use crate::dynamics::{build_world_unchecked, PhysicsConfig, WorldState};
use crate::error::EnvError;
use crate::metrics::{compute_cqi, net_snapshot, CaptureReport};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Simulated time between two decisions, s.
    pub control_interval: f64,
    /// Time the net is left to settle after closing before the episode ends, s.
    pub settle_time: f64,
    /// Episodes without a closing signal end at this time, s.
    pub close_deadline: f64,
    pub noise: NoiseModel,
    pub noise_enabled: bool,
    pub doe: DoeRanges,
    pub schedule: StageSchedule,
    pub premature: PrematureRule,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            control_interval: 1.0,
            settle_time: 20.0,
            close_deadline: 60.0,
            noise: NoiseModel::default(),
            noise_enabled: true,
            doe: DoeRanges::default(),
            schedule: StageSchedule::default(),
            premature: PrematureRule::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self, physics: &PhysicsConfig) -> Result<(), EnvError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.control_interval)
            || !positive(self.settle_time)
            || !positive(self.close_deadline)
        {
            return Err(EnvError::Config(
                "control interval, settle time and deadline must be positive".into(),
            ));
        }
        let substeps = self.control_interval / physics.integrator.dt;
        if (substeps - substeps.round()).abs() > 1e-6 || substeps.round() < 1.0 {
            return Err(EnvError::Config(format!(
                "control interval {} s is not a whole number of {} s physics steps",
                self.control_interval, physics.integrator.dt
            )));
        }
        self.noise.validate().map_err(EnvError::Config)?;
        self.schedule.validate().map_err(EnvError::Config)?;
        Ok(())
    }

    pub fn effective_noise(&self) -> NoiseModel {
        if self.noise_enabled {
            self.noise
        } else {
            NoiseModel::none()
        }
    }
}

/// Extra information returned with every step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Noise-free observation after the step.
    pub true_observation: Observation,
    /// Running `(Σ rewards) / n_steps` of the episode.
    pub average_reward: f64,
    /// Terminal reward, already folded into the step reward.
    pub end_reward: Option<f64>,
    pub report: Option<CaptureReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    /// Noisy observation after the step, physical units.
    pub observation: Observation,
    pub normalized: Vec<T>,
    pub reward: T,
    pub done: bool,
    pub info: StepInfo,
}

struct Episode<T: Real> {
    world: WorldState<T>,
    rng: ChaCha8Rng,
    doe: DoESample,
    seed: u64,
    substeps: usize,
    target_offset: [f64; 3],
    commanded_launch: [f64; 3],
    t_close: Option<f64>,
    total_reward: f64,
    n_steps: usize,
    done: bool,
}

/// One simulated capture scene exposed as an episodic environment.
pub struct TetherNetEnv<T: Real> {
    physics: PhysicsConfig,
    config: EnvConfig,
    sampler: ChaCha8Rng,
    global_step: u64,
    episode: Option<Episode<T>>,
}

impl<T: Real> TetherNetEnv<T> {
    /// `seed` drives the initial-state and episode-seed draws of [`Environment::reset`].
    pub fn new(physics: PhysicsConfig, config: EnvConfig, seed: u64) -> Result<Self, EnvError> {
        physics.validate()?;
        config.validate(&physics)?;
        Ok(Self {
            physics,
            config,
            sampler: ChaCha8Rng::seed_from_u64(seed),
            global_step: 0,
            episode: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn physics(&self) -> &PhysicsConfig {
        &self.physics
    }

    pub fn global_step(&self) -> u64 {
        self.global_step
    }

    pub fn world(&self) -> Option<&WorldState<T>> {
        self.episode.as_ref().map(|e| &e.world)
    }

    pub fn is_closed(&self) -> bool {
        self.episode.as_ref().is_some_and(|e| e.t_close.is_some())
    }

    /// Starts an episode from `doe`; `seed` drives every noise draw of the episode.
    pub fn reset_with(&mut self, doe: DoESample, seed: u64) -> Result<Observation, EnvError> {
        self.episode = None;
        self.config.doe.validate(&doe)?;
        let mut world = build_world_unchecked::<T>(&self.physics, &doe)?;
        let noise = self.config.effective_noise();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target_offset = sample3(&mut rng, &noise.target_position);
        let dv = sample3(&mut rng, &noise.launch_velocity);
        let commanded = self.physics.launch_velocity;
        let applied = Vector3::new(
            T::of(commanded[0] + dv[0]),
            T::of(commanded[1] + dv[1]),
            T::of(commanded[2] + dv[2]),
        );
        world.launch(&applied)?;
        let substeps = (self.config.control_interval / self.physics.integrator.dt).round() as usize;
        let mut episode = Episode {
            world,
            rng,
            doe,
            seed,
            substeps,
            target_offset,
            commanded_launch: commanded,
            t_close: None,
            total_reward: 0.0,
            n_steps: 0,
            done: false,
        };
        let obs = Self::observe(&mut episode, &noise);
        self.episode = Some(episode);
        Ok(obs)
    }

    fn observe(episode: &mut Episode<T>, noise: &NoiseModel) -> Observation {
        let mut obs = Observation::of_world(&episode.world, episode.commanded_launch);
        let d_ori = sample3(&mut episode.rng, &noise.orientation);
        let d_ang = sample3(&mut episode.rng, &noise.angular_velocity);
        for k in 0..3 {
            obs.target_position[k] += episode.target_offset[k];
            obs.target_orientation[k] += d_ori[k];
            obs.target_angular_velocity[k] += d_ang[k];
        }
        for corner in obs.corner_positions.iter_mut() {
            let d = sample3(&mut episode.rng, &noise.corner_position);
            for k in 0..3 {
                corner[k] += d[k];
            }
        }
        obs
    }

    /// Applies the decision for the current control interval and advances the physics.
    pub fn step_with(&mut self, close: bool) -> Result<StepOutcome<T>, EnvError> {
        let noise = self.config.effective_noise();
        let coeffs = self.config.schedule.coefficients(self.global_step);
        let cfg = &self.config;
        let episode = self.episode.as_mut().ok_or(EnvError::NotStarted)?;
        if episode.done {
            return Err(EnvError::EpisodeComplete);
        }
        let world = &mut episode.world;
        let spec = world.model().target.clone();
        let interval = cfg.control_interval;
        // Decision times sit on the control grid; the physics clock accumulates rounding.
        let t = T::of(episode.n_steps as f64 * interval);

        let mut reward = T::zero();
        if episode.t_close.is_none() {
            let snapshot = net_snapshot(world);
            let target = world.target.position;
            let mut premature = false;
            if close {
                let corners = world.corner_positions();
                let mean_corner = corners.iter().fold(Vector3::zeros(), |a, c| a + c) / T::of(4.0);
                premature = cfg.premature.is_premature(
                    true,
                    t.as_f64(),
                    (snapshot.com - target).norm().as_f64(),
                    (mean_corner - target).norm().as_f64(),
                );
                episode.t_close = Some(t.as_f64());
                world.activate_closing();
            }
            reward = step_reward(&snapshot, &target, &spec, &coeffs, t, premature, t)?;
        }

        let dt = T::of(self.physics.integrator.dt);
        for _ in 0..episode.substeps {
            world.step(dt)?;
        }
        episode.n_steps += 1;

        let now = episode.n_steps as f64 * interval;
        let half_step = 0.5 * self.physics.integrator.dt;
        let (done, r_end, report) = match episode.t_close {
            Some(tc) if now + half_step >= tc + cfg.settle_time => {
                let snapshot = net_snapshot(world);
                let r = end_reward(
                    Some((&snapshot, &world.target.position)),
                    &spec,
                    &coeffs.end,
                )?;
                let cqi = compute_cqi(world, &spec).as_f64();
                let report = CaptureReport::new(
                    cqi,
                    world.locked_count(),
                    Some(tc),
                    episode.seed,
                    episode.doe,
                );
                (true, Some(r), Some(report))
            }
            None if now + half_step >= cfg.close_deadline => {
                let r: T = end_reward(None, &spec, &coeffs.end)?;
                let report = CaptureReport::new(
                    f64::INFINITY,
                    world.locked_count(),
                    None,
                    episode.seed,
                    episode.doe,
                );
                (true, Some(r), Some(report))
            }
            _ => (false, None, None),
        };
        if let Some(r) = r_end {
            reward += r;
        }
        episode.total_reward += reward.as_f64();
        episode.done = done;

        let mut true_observation = Observation::of_world(&episode.world, episode.commanded_launch);
        true_observation.time = now;
        let mut observation = Self::observe(episode, &noise);
        observation.time = now;
        Ok(StepOutcome {
            normalized: observation.normalized(),
            observation,
            reward,
            done,
            info: StepInfo {
                true_observation,
                average_reward: episode.total_reward / episode.n_steps as f64,
                end_reward: r_end.map(|r| r.as_f64()),
                report,
            },
        })
    }

    fn summary(&self) -> Option<EpisodeSummary> {
        let e = self.episode.as_ref()?;
        Some(EpisodeSummary {
            n_steps: e.n_steps,
            total_reward: e.total_reward,
            score: e.total_reward / e.n_steps.max(1) as f64,
            t_close: e.t_close,
            report: None,
        })
    }
}

impl<T: Real> Environment<T> for TetherNetEnv<T> {
    fn observation_dim(&self) -> usize {
        OBSERVATION_DIM
    }

    fn reset(&mut self) -> Result<Vec<T>, EnvError> {
        let seed = self.sampler.next_u64();
        let doe = self.config.doe.sample(&mut self.sampler, seed);
        Ok(self.reset_with(doe, seed)?.normalized())
    }

    fn step(&mut self, action: usize) -> Result<Transition<T>, EnvError> {
        let out = self.step_with(action == CLOSE)?;
        let episode = out.done.then(|| {
            let mut s = self.summary().expect("episode exists");
            s.report = out.info.report.clone();
            s
        });
        Ok(Transition {
            observation: out.normalized,
            reward: out.reward,
            done: out.done,
            episode,
        })
    }

    fn set_global_step(&mut self, global_step: u64) {
        self.global_step = global_step;
    }
}
