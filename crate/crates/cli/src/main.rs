//! `tethernet` command-line tool: training, evaluation, single rollouts and the toy PPO task.

mod evaluate;
mod output;
mod rollout;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tethernet::SceneConfig;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(
    name = "tethernet",
    version,
    about = "Tether-net capture simulator, PPO trainer and reliability evaluator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a closing policy with PPO.
    Train(train::TrainArgs),
    /// Monte Carlo success rate of a policy or a fixed closing time.
    Evaluate(evaluate::EvaluateArgs),
    /// Run and record one episode.
    Rollout(rollout::RolloutArgs),
    /// Train on the closing-timing toy task.
    ToyTrain(train::ToyTrainArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Full,
    Desk,
}

/// Options shared by every command.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Built-in scene used when no scene file is given.
    #[arg(long, value_enum, default_value = "full")]
    pub preset: Preset,
    /// Scene configuration JSON; replaces the preset.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, env = "TETHERNET_OUT", default_value = "runs/latest")]
    pub out: PathBuf,
    /// Disable all observation and launch noise.
    #[arg(long)]
    pub no_noise: bool,
}

impl Common {
    pub fn scene(&self) -> Result<SceneConfig> {
        let mut scene = match &self.scene {
            Some(path) => {
                if !path.exists() {
                    bail!("scene file {} does not exist", path.display());
                }
                SceneConfig::load(path)?
            }
            None => match self.preset {
                Preset::Full => SceneConfig::full_scale(),
                Preset::Desk => SceneConfig::desk_scale(),
            },
        };
        if self.no_noise {
            scene.env.noise_enabled = false;
        }
        scene.validate().context("invalid scene configuration")?;
        Ok(scene)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Rollout(a) => rollout::run(a),
        Command::ToyTrain(a) => train::run_toy(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
