//! `rollout` command: one recorded episode.

use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tethernet::dynamics::TrajectoryRecord;
use tethernet::env::{DoESample, TetherNetEnv, CLOSE};
use tethernet::learner::{ActorCritic, Checkpoint};
use tethernet::metrics::CaptureReport;
use tethernet::reliability::rollout_setup;

use crate::output::{Manifest, OutputDir};
use crate::Common;

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("policy_source").required(true).args(["policy", "close_time"]))]
pub struct RolloutArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Close at this time instead of asking a policy, s.
    #[arg(long)]
    pub close_time: Option<f64>,
    /// Target distance, m; the initial state is sampled from the seed when omitted.
    #[arg(long)]
    pub distance: Option<f64>,
    /// Target Euler angles (roll pitch yaw), rad.
    #[arg(
        long,
        num_args = 3,
        requires = "distance",
        allow_negative_numbers = true
    )]
    pub orientation: Option<Vec<f64>>,
    /// Target angular velocity, rad/s.
    #[arg(
        long,
        num_args = 3,
        requires = "distance",
        allow_negative_numbers = true
    )]
    pub angular_velocity: Option<Vec<f64>>,
    /// Trajectory file; defaults to trajectory.jsonl in the output directory.
    #[arg(long)]
    pub record: Option<PathBuf>,
    /// Include node positions every this many control steps.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub decimation: u64,
    /// Sample actions instead of taking the most probable one.
    #[arg(long)]
    pub sample: bool,
}

#[derive(Serialize)]
struct RolloutConfig<'a> {
    scene: &'a tethernet::SceneConfig,
    doe: DoESample,
    episode_seed: u64,
}

fn triple(v: &Option<Vec<f64>>) -> [f64; 3] {
    v.as_ref().map(|v| [v[0], v[1], v[2]]).unwrap_or([0.0; 3])
}

pub fn run(args: RolloutArgs) -> Result<ExitCode> {
    let scene = args.common.scene()?;
    let net: Option<ActorCritic<f64>> = match &args.policy {
        Some(p) => {
            if !p.exists() {
                bail!("checkpoint {} does not exist", p.display());
            }
            Some(Checkpoint::load(p)?.network()?)
        }
        None => None,
    };
    let seed = args.common.seed;
    let (doe, episode_seed) = match args.distance {
        Some(d) => (
            DoESample::new(
                d,
                triple(&args.orientation),
                triple(&args.angular_velocity),
                seed,
            ),
            seed,
        ),
        None => rollout_setup(&scene.env.doe, seed, 0),
    };
    let out = OutputDir::claim(&args.common.out)?;
    let path = args
        .record
        .clone()
        .unwrap_or_else(|| out.file("trajectory.jsonl"));
    let file =
        std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    let hash = tethernet::config_hash(&scene, None);
    let run_cfg = RolloutConfig {
        scene: &scene,
        doe,
        episode_seed,
    };

    let mut env = TetherNetEnv::<f64>::new(scene.physics.clone(), scene.env.clone(), episode_seed)?;
    let mut obs = env.reset_with(doe, episode_seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(episode_seed);
    let mut step = 0usize;
    let record = |env: &TetherNetEnv<f64>,
                  step: usize,
                  time: f64,
                  reward: Option<f64>,
                  w: &mut BufWriter<_>|
     -> Result<()> {
        let world = env.world().expect("episode active");
        let mut rec =
            TrajectoryRecord::capture(world, step, (step as u64).is_multiple_of(args.decimation));
        rec.time = time;
        rec.reward = reward;
        writeln!(w, "{}", rec.to_json_line())?;
        w.flush()?;
        Ok(())
    };
    record(&env, 0, obs.time, None, &mut w)?;
    let report: CaptureReport = loop {
        let close = match (&net, args.close_time) {
            (Some(net), _) => {
                let (dist, _) = net.policy(&obs.normalized::<f64>())?;
                let a = if args.sample {
                    dist.sample(&mut rng)
                } else {
                    dist.mode()
                };
                a == CLOSE
            }
            (None, Some(t)) => obs.time >= t - 1e-9,
            (None, None) => unreachable!("clap enforces a policy source"),
        };
        let outcome = match env.step_with(close) {
            Ok(o) => o,
            Err(e) => {
                let report = CaptureReport::failed(episode_seed, doe, e.to_string());
                out.write_json("report.json", &report)?;
                out.write_json(
                    "manifest.json",
                    &Manifest::new("rollout", seed, &hash, &run_cfg, "failed"),
                )?;
                eprintln!(
                    "rollout failed: {e}; partial trajectory in {}",
                    path.display()
                );
                return Ok(ExitCode::FAILURE);
            }
        };
        step += 1;
        record(
            &env,
            step,
            outcome.observation.time,
            Some(outcome.reward),
            &mut w,
        )?;
        obs = outcome.observation;
        if outcome.done {
            break outcome.info.report.expect("terminal step carries a report");
        }
    };
    out.write_json("report.json", &report)?;
    out.write_json(
        "manifest.json",
        &Manifest::new("rollout", seed, &hash, &run_cfg, "complete"),
    )?;
    println!(
        "cqi {}  locked {}/12  t_close {}  success {}",
        if report.cqi.is_finite() {
            format!("{:.4}", report.cqi)
        } else {
            "n/a".into()
        },
        report.n_locked,
        report
            .t_close
            .map(|t| format!("{t} s"))
            .unwrap_or_else(|| "never".into()),
        report.success
    );
    Ok(ExitCode::SUCCESS)
}
