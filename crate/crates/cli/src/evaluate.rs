//! `evaluate` command.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;
use tethernet::learner::Checkpoint;
use tethernet::reliability::{compare_baseline, evaluate, ClosePolicy, PolicyRunner};
use tethernet::{config_hash, SceneConfig};

use crate::output::{Manifest, OutputDir};
use crate::Common;

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("policy_source").required(true).args(["policy", "baseline_close_time"]))]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Policy checkpoint.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Evaluate the scripted baseline that closes at this time, s.
    #[arg(long)]
    pub baseline_close_time: Option<f64>,
    /// Number of rollouts.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Sample actions instead of taking the most probable one.
    #[arg(long)]
    pub sample: bool,
    /// Exit with status 2 when the success rate falls below this value.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Print a comparison against this baseline success rate (needs --compare-cqi).
    #[arg(long, requires = "compare_cqi")]
    pub compare_success: Option<f64>,
    /// Baseline mean CQI for the comparison table.
    #[arg(long, requires = "compare_success")]
    pub compare_cqi: Option<f64>,
}

#[derive(Serialize)]
struct EvalConfig<'a> {
    scene: &'a SceneConfig,
    policy: String,
    n: u64,
    greedy: bool,
}

pub fn run(args: EvaluateArgs) -> Result<ExitCode> {
    let scene = args.common.scene()?;
    let (policy, label) = match (&args.policy, args.baseline_close_time) {
        (Some(path), _) => {
            if !path.exists() {
                bail!("checkpoint {} does not exist", path.display());
            }
            let ckpt = Checkpoint::load(path)?;
            let net = ckpt.network::<f64>()?;
            (
                ClosePolicy::Network {
                    net,
                    greedy: !args.sample,
                },
                format!("checkpoint:{}", ckpt.config_hash),
            )
        }
        (None, Some(t)) => {
            if !(t.is_finite() && t >= 0.0) {
                bail!("--baseline-close-time must be a non-negative number of seconds");
            }
            (
                ClosePolicy::FixedCloseTime(t),
                format!("fixed-close-time:{t}"),
            )
        }
        (None, None) => unreachable!("clap enforces a policy source"),
    };
    let eval_cfg = EvalConfig {
        scene: &scene,
        policy: label,
        n: args.n,
        greedy: !args.sample,
    };
    let hash = config_hash(&scene, None);
    let out = OutputDir::claim(&args.common.out)?;
    let runner = PolicyRunner::new(scene.physics.clone(), scene.env.clone(), policy)?;
    let report = evaluate(&runner, args.n as usize, args.common.seed, &hash)?;

    out.write_json("report.json", &report)?;
    out.write("summary.csv", &report.summary_csv())?;
    out.write("rollouts.csv", &report.rollouts_csv())?;
    out.write_json(
        "manifest.json",
        &Manifest::new("evaluate", args.common.seed, &hash, &eval_cfg, "complete"),
    )?;

    println!(
        "success rate {:.3} ± {:.3} over {} rollouts; mean CQI {}; not closed {}; failed {}",
        report.success_rate,
        report.standard_error(),
        report.n_rollouts,
        report
            .mean_cqi
            .map(|m| format!("{m:.4}"))
            .unwrap_or_else(|| "n/a".into()),
        report.n_not_closed,
        report.n_failed
    );
    if let (Some(s), Some(c)) = (args.compare_success, args.compare_cqi) {
        let table = compare_baseline(&report, s, c);
        println!("{table}");
        out.write_json("comparison.json", &table)?;
    }
    if let Some(th) = args.threshold {
        if report.success_rate < th {
            eprintln!(
                "success rate {:.3} below threshold {th}",
                report.success_rate
            );
            return Ok(ExitCode::from(2));
        }
    }
    Ok(ExitCode::SUCCESS)
}
