//! Output directory handling: lock file, run manifest and CSV writers.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use tethernet::learner::{EpisodeRecord, UpdateReport};

/// Exclusive claim on an output directory, released on drop.
pub struct OutputDir {
    pub path: PathBuf,
    lock: PathBuf,
}

impl OutputDir {
    pub fn claim(path: &Path) -> Result<Self> {
        fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
        let lock = path.join(".lock");
        let mut f = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock)
            .with_context(|| {
                format!(
                    "{} is in use by another run (remove {} if stale)",
                    path.display(),
                    lock.display()
                )
            })?;
        writeln!(f, "{}", std::process::id())?;
        Ok(Self {
            path: path.to_path_buf(),
            lock,
        })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        let p = self.file(name);
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))
    }

    pub fn write_json<S: Serialize>(&self, name: &str, value: &S) -> Result<()> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

/// Reproduction record of a command invocation.
#[derive(Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub args: Vec<String>,
    pub seed: u64,
    pub config_hash: &'a str,
    pub config: &'a C,
    pub status: &'a str,
}

impl<'a, C: Serialize> Manifest<'a, C> {
    pub fn new(
        command: &'a str,
        seed: u64,
        config_hash: &'a str,
        config: &'a C,
        status: &'a str,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            args: std::env::args().skip(1).collect(),
            seed,
            config_hash,
            config,
            status,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite())
        .map(|x| x.to_string())
        .unwrap_or_default()
}

pub fn rewards_csv(episodes: &[EpisodeRecord]) -> String {
    let mut s = String::from(
        "episode,worker,global_step,n_steps,r_a,moving_avg,total_reward,t_close,cqi\n",
    );
    for e in episodes {
        s += &format!(
            "{},{},{},{},{},{},{},{},{}\n",
            e.episode,
            e.worker,
            e.global_step,
            e.n_steps,
            e.score,
            e.moving_average,
            e.total_reward,
            opt(e.t_close),
            opt(e.cqi)
        );
    }
    s
}

pub fn updates_csv(updates: &[UpdateReport]) -> String {
    let mut s = String::from(
        "update,global_step,episodes,moving_avg,loss,policy_loss,value_loss,entropy,approx_kl,clip_fraction,grad_norm\n",
    );
    for u in updates {
        let l = &u.stats.loss;
        s += &format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            u.update,
            u.global_step,
            u.episodes,
            opt(u.moving_average),
            l.loss,
            l.policy_loss,
            l.value_loss,
            l.entropy,
            l.approx_kl,
            l.clip_fraction,
            u.stats.grad_norm
        );
    }
    s
}
