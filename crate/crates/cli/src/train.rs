//! `train` and `toy-train` commands.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use tethernet::env::{ClosingTimingToy, TetherNetEnv};
use tethernet::learner::{
    greedy_score, train, Checkpoint, TrainConfig, TrainOutcome, TrainingLog, WorkerStats,
};
use tethernet::{config_hash, SceneConfig};

use crate::output::{rewards_csv, updates_csv, Manifest, OutputDir};
use crate::{Common, DEFAULT_SEED};

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Training configuration JSON; flags below override it.
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    /// Parallel environments.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Total environment steps over all workers.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Write a checkpoint every this many updates.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub checkpoint_every: u64,
}

#[derive(Args, Debug)]
pub struct ToyTrainArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, env = "TETHERNET_OUT", default_value = "runs/toy")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    #[arg(long, default_value_t = 50_000)]
    pub steps: u64,
    /// Greedy evaluation episodes after training.
    #[arg(long, default_value_t = 1000)]
    pub eval_episodes: usize,
}

fn interrupt_flag() -> Arc<AtomicBool> {
    let flag = Arc::new(AtomicBool::new(false));
    let f = Arc::clone(&flag);
    // A second registration in the same process fails; the first handler stays in place.
    let _ = ctrlc::set_handler(move || f.store(true, Ordering::SeqCst));
    flag
}

#[derive(Serialize)]
struct TrainRunConfig<'a> {
    scene: Option<&'a SceneConfig>,
    train: &'a TrainConfig,
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    global_step: u64,
    episodes: usize,
    updates: usize,
    first_10_mean: Option<f64>,
    last_10_mean: Option<f64>,
    workers: &'a [WorkerStats],
}

struct Finished {
    status: &'static str,
    code: ExitCode,
}

fn write_outputs<T>(
    out: &OutputDir,
    outcome: &TrainOutcome<f64>,
    hash: &str,
    interrupted: bool,
    manifest: impl FnOnce(&str) -> Manifest<'_, T>,
) -> Result<Finished>
where
    T: Serialize,
{
    Checkpoint::new(&outcome.params, hash, outcome.global_step).save(&out.file("policy.json"))?;
    write_logs(out, &outcome.log)?;
    let (status, code) = match (&outcome.error, interrupted) {
        (Some(e), _) => {
            eprintln!("training aborted: {e}; last good parameters saved");
            ("aborted", ExitCode::FAILURE)
        }
        (None, true) => ("interrupted", ExitCode::from(130)),
        (None, false) => ("complete", ExitCode::SUCCESS),
    };
    out.write_json("manifest.json", &manifest(status))?;
    out.write_json(
        "summary.json",
        &TrainSummary {
            global_step: outcome.global_step,
            episodes: outcome.log.episodes.len(),
            updates: outcome.log.updates.len(),
            first_10_mean: outcome.log.first_mean(10),
            last_10_mean: outcome.log.last_mean(10),
            workers: &outcome.log.workers,
        },
    )?;
    Ok(Finished { status, code })
}

fn write_logs(out: &OutputDir, log: &TrainingLog) -> Result<()> {
    out.write("rewards.csv", &rewards_csv(&log.episodes))?;
    out.write("updates.csv", &updates_csv(&log.updates))
}

pub fn run(args: TrainArgs) -> Result<ExitCode> {
    let scene = args.common.scene()?;
    let mut cfg = match &args.train_config {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<TrainConfig>(&text)
                .with_context(|| format!("parsing {}", p.display()))?
        }
        None => TrainConfig::default(),
    };
    if let Some(w) = args.workers {
        cfg.n_workers = w;
    }
    if let Some(s) = args.steps {
        cfg.total_timesteps = s;
    }
    cfg.seed = args.common.seed;
    cfg.validate()?;
    let hash = config_hash(&scene, Some(&cfg));
    let out = OutputDir::claim(&args.common.out)?;
    let stop = interrupt_flag();

    let seed = cfg.seed;
    let outcome = train::<f64, _, _, _>(
        |k| {
            TetherNetEnv::new(
                scene.physics.clone(),
                scene.env.clone(),
                seed.wrapping_add(k as u64),
            )
        },
        &cfg,
        |report, net, log| {
            eprintln!(
                "update {:>5}  step {:>9}  episodes {:>6}  avg10 {:>9}  entropy {:.3}",
                report.update,
                report.global_step,
                report.episodes,
                report
                    .moving_average
                    .map(|m| format!("{m:.3}"))
                    .unwrap_or_else(|| "-".into()),
                report.stats.loss.entropy
            );
            if (report.update as u64).is_multiple_of(args.checkpoint_every) {
                let saved =
                    Checkpoint::new(net, &hash, report.global_step).save(&out.file("policy.json"));
                let logged = write_logs(&out, log);
                if let Err(e) = saved.map_err(anyhow::Error::from).and(logged) {
                    eprintln!("checkpoint failed: {e:#}");
                }
            }
            !stop.load(Ordering::SeqCst)
        },
    )?;
    let run_cfg = TrainRunConfig {
        scene: Some(&scene),
        train: &cfg,
    };
    let done = write_outputs(
        &out,
        &outcome,
        &hash,
        stop.load(Ordering::SeqCst),
        |status| Manifest::new("train", seed, &hash, &run_cfg, status),
    )?;
    eprintln!(
        "{}: {} steps, outputs in {}",
        done.status,
        outcome.global_step,
        out.path.display()
    );
    Ok(done.code)
}

pub fn run_toy(args: ToyTrainArgs) -> Result<ExitCode> {
    if args.eval_episodes == 0 {
        bail!("--eval-episodes must be at least 1");
    }
    let cfg = TrainConfig {
        total_timesteps: args.steps,
        n_workers: args.workers,
        seed: args.seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    let hash = config_hash(&SceneConfig::default(), Some(&cfg));
    let out = OutputDir::claim(&args.out)?;
    let stop = interrupt_flag();
    let seed = args.seed;
    let outcome = train::<f64, _, _, _>(
        |k| Ok(ClosingTimingToy::new(seed.wrapping_add(k as u64))),
        &cfg,
        |_, _, _| !stop.load(Ordering::SeqCst),
    )?;
    let run_cfg = TrainRunConfig {
        scene: None,
        train: &cfg,
    };
    let done = write_outputs(
        &out,
        &outcome,
        &hash,
        stop.load(Ordering::SeqCst),
        |status| Manifest::new("toy-train", seed, &hash, &run_cfg, status),
    )?;
    let score = greedy_score(
        &outcome.params,
        &mut ClosingTimingToy::new(seed ^ 0x5EED),
        args.eval_episodes,
    )?;
    println!(
        "greedy mean reward {score:.4} (optimum {:.1}) after {} steps",
        ClosingTimingToy::OPTIMUM,
        outcome.global_step
    );
    Ok(done.code)
}
