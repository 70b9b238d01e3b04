//! Reward tuning constants and the step-keyed training stages.

use serde::{Deserialize, Serialize};

/// Per-step shaping constants, fixed for the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepWeights {
    /// w1..w4
    pub w: [f64; 4],
    /// C1..C5
    pub c: [f64; 5],
    pub t1: f64,
    pub t2: f64,
}

/// End-of-episode constants that change from stage to stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndWeights {
    /// w'1..w'4
    pub w: [f64; 4],
    /// C'1..C'5
    pub c: [f64; 5],
    /// Terminal reward when the net was never closed.
    pub c6: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardCoefficients {
    pub step: StepWeights,
    pub end: EndWeights,
}

/// End weights in force up to and including `last_step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub last_step: u64,
    pub end: EndWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSchedule {
    pub step: StepWeights,
    /// Ordered by `last_step`; steps past the final stage keep its weights.
    pub stages: Vec<Stage>,
}

impl Default for StageSchedule {
    fn default() -> Self {
        let end = |w: [f64; 4], c: [f64; 5], c6: f64| EndWeights { w, c, c6 };
        Self {
            step: StepWeights {
                w: [0.025, 0.025, 0.2, 0.125],
                c: [3.0, 3.0, 5.0, 2.0, 2.0],
                t1: 15.0,
                t2: 20.0,
            },
            stages: vec![
                Stage {
                    last_step: 66_000,
                    end: end([0.05, 0.05, 0.4, 0.125], [3.0, 4.0, 6.0, 0.0, 50.0], 0.0),
                },
                Stage {
                    last_step: 300_000,
                    end: end([0.1, 0.1, 0.8, 0.25], [3.0, 3.0, 6.0, 0.0, 50.0], 0.0),
                },
                Stage {
                    last_step: 800_000,
                    end: end([1.0, 1.0, 8.0, 2.5], [3.0, 3.0, 6.0, 0.0, 50.0], -50.0),
                },
                Stage {
                    last_step: 1_500_000,
                    end: end([2.0, 2.0, 16.0, 5.0], [3.0, 3.0, 3.0, 2.0, 100.0], -50.0),
                },
            ],
        }
    }
}

impl StageSchedule {
    /// Coefficients in force at `global_step` (summed over all workers).
    pub fn coefficients(&self, global_step: u64) -> RewardCoefficients {
        let stage = self
            .stages
            .iter()
            .find(|s| global_step <= s.last_step)
            .or(self.stages.last())
            .expect("schedule has at least one stage");
        RewardCoefficients {
            step: self.step,
            end: stage.end,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.stages.is_empty() {
            return Err("stage schedule is empty".into());
        }
        if self
            .stages
            .windows(2)
            .any(|w| w[0].last_step >= w[1].last_step)
        {
            return Err("stage boundaries must be strictly increasing".into());
        }
        if self.step.t1 <= 0.0 || self.step.t2 <= 0.0 {
            return Err("t1 and t2 must be positive".into());
        }
        Ok(())
    }
}

/// Coefficients of the default schedule at `global_step`.
pub fn stage_coefficients(global_step: u64) -> RewardCoefficients {
    StageSchedule::default().coefficients(global_step)
}
