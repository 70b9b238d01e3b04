//! Monte Carlo reliability of a closing policy over randomised initial states.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::PhysicsConfig;
use crate::env::{DoESample, DoeRanges, EnvConfig, TetherNetEnv};
use crate::error::EnvError;
use crate::learner::ActorCritic;
use crate::metrics::{is_success, CaptureReport};

/// Runs one capture episode from a given initial state and seed.
pub trait RolloutRunner: Sync {
    fn run(&self, doe: DoESample, seed: u64) -> CaptureReport;
}

/// How the closing decision is taken at each control step.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosePolicy {
    /// Network policy; `greedy` takes the most probable action, otherwise actions are sampled.
    Network { net: ActorCritic<f64>, greedy: bool },
    /// Closes at the first decision time at or after the given time, s.
    FixedCloseTime(f64),
}

/// Plays a [`ClosePolicy`] in the simulated capture environment.
#[derive(Debug, Clone)]
pub struct PolicyRunner {
    pub physics: PhysicsConfig,
    pub env: EnvConfig,
    pub policy: ClosePolicy,
}

impl PolicyRunner {
    pub fn new(
        physics: PhysicsConfig,
        env: EnvConfig,
        policy: ClosePolicy,
    ) -> Result<Self, EnvError> {
        TetherNetEnv::<f64>::new(physics.clone(), env.clone(), 0)?;
        if let ClosePolicy::Network { net, .. } = &policy {
            if net.shape.input != crate::env::OBSERVATION_DIM || net.shape.actions != 2 {
                return Err(EnvError::Config(format!(
                    "policy expects {} inputs and {} actions",
                    net.shape.input, net.shape.actions
                )));
            }
        }
        Ok(Self {
            physics,
            env,
            policy,
        })
    }

    fn episode(&self, doe: DoESample, seed: u64) -> Result<CaptureReport, EnvError> {
        let mut env = TetherNetEnv::<f64>::new(self.physics.clone(), self.env.clone(), seed)?;
        let mut obs = env.reset_with(doe, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0xA5A5_A5A5));
        loop {
            let close = match &self.policy {
                ClosePolicy::FixedCloseTime(tc) => obs.time >= tc - 1e-9,
                ClosePolicy::Network { net, greedy } => {
                    let (dist, _) = net
                        .policy(&obs.normalized::<f64>())
                        .map_err(|e| EnvError::Config(e.to_string()))?;
                    let a = if *greedy {
                        dist.mode()
                    } else {
                        dist.sample(&mut rng)
                    };
                    a == crate::env::CLOSE
                }
            };
            let out = env.step_with(close)?;
            if out.done {
                return Ok(out.info.report.expect("terminal step carries a report"));
            }
            obs = out.observation;
        }
    }
}

impl RolloutRunner for PolicyRunner {
    fn run(&self, doe: DoESample, seed: u64) -> CaptureReport {
        self.episode(doe, seed)
            .unwrap_or_else(|e| CaptureReport::failed(seed, doe, e.to_string()))
    }
}

/// SplitMix64 finaliser, used to derive independent per-rollout seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed and initial state of rollout `index` of a run seeded with `seed`.
pub fn rollout_setup(ranges: &DoeRanges, seed: u64, index: usize) -> (DoESample, u64) {
    let s = splitmix64(seed.wrapping_add(index as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let doe = ranges.sample(&mut rng, s);
    (doe, rng.random())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub n_rollouts: usize,
    pub success_rate: f64,
    /// Mean over rollouts with a finite CQI; `None` if there are none.
    pub mean_cqi: Option<f64>,
    pub n_not_closed: usize,
    pub n_failed: usize,
    #[serde(with = "cqi_list")]
    pub cqi_list: Vec<f64>,
    pub rollouts: Vec<CaptureReport>,
    pub config_hash: String,
    pub seed: u64,
}

mod cqi_list {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.is_finite().then_some(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
    }
}

impl ReliabilityReport {
    pub fn from_reports(rollouts: Vec<CaptureReport>, config_hash: String, seed: u64) -> Self {
        let cqi_list: Vec<f64> = rollouts.iter().map(|r| r.cqi).collect();
        let n = rollouts.len();
        let successes = cqi_list.iter().filter(|c| is_success(**c)).count();
        let finite: Vec<f64> = cqi_list.iter().copied().filter(|c| c.is_finite()).collect();
        Self {
            n_rollouts: n,
            success_rate: if n == 0 {
                0.0
            } else {
                successes as f64 / n as f64
            },
            mean_cqi: (!finite.is_empty())
                .then(|| finite.iter().sum::<f64>() / finite.len() as f64),
            n_not_closed: rollouts
                .iter()
                .filter(|r| r.failure.is_none() && r.t_close.is_none())
                .count(),
            n_failed: rollouts.iter().filter(|r| r.failure.is_some()).count(),
            cqi_list,
            rollouts,
            config_hash,
            seed,
        }
    }

    /// Binomial standard error of the success rate.
    pub fn standard_error(&self) -> f64 {
        let p = self.success_rate;
        (p * (1.0 - p) / self.n_rollouts.max(1) as f64).sqrt()
    }

    /// Aggregate figures as a two-line CSV.
    pub fn summary_csv(&self) -> String {
        let mean = self.mean_cqi.map(|m| m.to_string()).unwrap_or_default();
        format!(
            "n_rollouts,success_rate,mean_cqi,n_not_closed,n_failed,seed,config_hash\n{},{},{},{},{},{},{}\n",
            self.n_rollouts, self.success_rate, mean, self.n_not_closed, self.n_failed, self.seed, self.config_hash
        )
    }

    /// One CSV row per rollout.
    pub fn rollouts_csv(&self) -> String {
        let mut out =
            String::from("rollout,episode_seed,distance,cqi,n_locked,t_close,success,failure\n");
        for (k, r) in self.rollouts.iter().enumerate() {
            let cqi = if r.cqi.is_finite() {
                r.cqi.to_string()
            } else {
                String::new()
            };
            let tc = r.t_close.map(|t| t.to_string()).unwrap_or_default();
            let failure = r.failure.as_deref().unwrap_or("").replace([',', '\n'], ";");
            out += &format!(
                "{k},{},{},{cqi},{},{tc},{},{failure}\n",
                r.episode_seed, r.doe.distance, r.n_locked, r.success
            );
        }
        out
    }
}

/// Runs `n` independent rollouts with initial states drawn from `ranges`.
///
/// Rollouts run in parallel; results are ordered by rollout index so the report
/// depends only on `seed`.
pub fn evaluate_with<R: RolloutRunner>(
    runner: &R,
    ranges: &DoeRanges,
    n: usize,
    seed: u64,
    config_hash: &str,
) -> Result<ReliabilityReport, EnvError> {
    if n == 0 {
        return Err(EnvError::Config("at least one rollout is required".into()));
    }
    let reports: Vec<CaptureReport> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (doe, episode_seed) = rollout_setup(ranges, seed, i);
            runner.run(doe, episode_seed)
        })
        .collect();
    Ok(ReliabilityReport::from_reports(
        reports,
        config_hash.to_string(),
        seed,
    ))
}

/// Evaluates `runner` over the initial-state ranges configured in its environment.
pub fn evaluate(
    runner: &PolicyRunner,
    n: usize,
    seed: u64,
    config_hash: &str,
) -> Result<ReliabilityReport, EnvError> {
    let ranges = runner.env.doe;
    evaluate_with(runner, &ranges, n, seed, config_hash)
}

/// Policy against baseline success rate and mean CQI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub policy_success: f64,
    pub policy_cqi: f64,
    pub baseline_success: f64,
    pub baseline_cqi: f64,
}

impl BaselineComparison {
    pub fn new(
        policy_success: f64,
        policy_cqi: f64,
        baseline_success: f64,
        baseline_cqi: f64,
    ) -> Self {
        Self {
            policy_success,
            policy_cqi,
            baseline_success,
            baseline_cqi,
        }
    }

    pub fn delta_success(&self) -> f64 {
        self.policy_success - self.baseline_success
    }

    pub fn delta_cqi(&self) -> f64 {
        self.policy_cqi - self.baseline_cqi
    }
}

/// Compares `report` with a baseline success rate and mean CQI.
pub fn compare_baseline(
    report: &ReliabilityReport,
    baseline_success: f64,
    baseline_cqi: f64,
) -> BaselineComparison {
    BaselineComparison::new(
        report.success_rate,
        report.mean_cqi.unwrap_or(f64::INFINITY),
        baseline_success,
        baseline_cqi,
    )
}

impl fmt::Display for BaselineComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>12} {:>10}", "", "success", "mean CQI")?;
        writeln!(
            f,
            "{:<10} {:>12.3} {:>10.3}",
            "policy", self.policy_success, self.policy_cqi
        )?;
        writeln!(
            f,
            "{:<10} {:>12.3} {:>10.3}",
            "baseline", self.baseline_success, self.baseline_cqi
        )?;
        write!(
            f,
            "{:<10} {:>+12.3} {:>+10.3}",
            "delta",
            self.delta_success(),
            self.delta_cqi()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(cqi: f64) -> CaptureReport {
        let t_close = cqi.is_finite().then_some(10.0);
        CaptureReport::new(cqi, 12, t_close, 0, DoESample::at_distance(30.0))
    }

    #[test]
    fn success_rate_counts_cqi_below_two() {
        let r = ReliabilityReport::from_reports(
            [1.0, 2.5, 1.9, 3.0].map(report).to_vec(),
            String::new(),
            0,
        );
        assert_eq!(r.success_rate, 0.5);
        assert_eq!(r.mean_cqi, Some(8.4 / 4.0));
    }

    #[test]
    fn non_closing_rollouts_fail_and_are_left_out_of_the_mean() {
        let r = ReliabilityReport::from_reports(
            [1.0, f64::INFINITY].map(report).to_vec(),
            String::new(),
            0,
        );
        assert_eq!(r.success_rate, 0.5);
        assert_eq!(r.mean_cqi, Some(1.0));
        assert_eq!(r.n_not_closed, 1);
        let json = serde_json::to_string(&r).unwrap();
        let back: ReliabilityReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn comparison_deltas() {
        let c = BaselineComparison::new(0.94, 1.035, 0.96, 1.010);
        assert!((c.delta_success() + 0.02).abs() < 1e-12);
        assert!((c.delta_cqi() - 0.025).abs() < 1e-12);
        let same = BaselineComparison::new(0.9, 1.2, 0.9, 1.2);
        assert_eq!((same.delta_success(), same.delta_cqi()), (0.0, 0.0));
        let table = c.to_string();
        assert!(table.contains("-0.020") && table.contains("+0.025"));
    }

    #[test]
    fn zero_rollouts_rejected() {
        struct Never;
        impl RolloutRunner for Never {
            fn run(&self, _: DoESample, _: u64) -> CaptureReport {
                unreachable!()
            }
        }
        assert!(evaluate_with(&Never, &DoeRanges::default(), 0, 1, "").is_err());
    }

    #[test]
    fn fixed_time_baseline_runs() {
        let runner = PolicyRunner::new(
            PhysicsConfig::desk_scale(),
            EnvConfig::default(),
            ClosePolicy::FixedCloseTime(14.0),
        )
        .unwrap();
        let a = evaluate(&runner, 4, 11, "h").unwrap();
        let b = evaluate(&runner, 4, 11, "h").unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(a
            .rollouts
            .iter()
            .all(|r| r.t_close == Some(14.0) && r.failure.is_none()));
    }
}
