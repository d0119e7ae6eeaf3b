//! Variant × density × seed maze experiments.
//!
//! Within a density, seed `i` gives every variant the same maze and the same
//! training seed, so variants are compared on paired runs.

use std::path::{Path, PathBuf};

use explorer_core::bebu::{
    relative_lengths, StrategyRegistry, TraceRow, Trainer, TrainerConfig,
};
use explorer_core::ensemble::save_checkpoint;
use explorer_core::envs::maze::generate_maze_with;
use explorer_core::envs::{MazeEnv, MazeSpec};
use explorer_core::seed::{derive_rng, derive_seed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MazeSuiteConfig};
use crate::error::{HarnessError, Result};
use crate::manifest::{RunManifest, SubSeed};
use crate::output::{mean_std, write_csv, write_json};

const MAZE_STREAM: u64 = 1;
const TRAIN_STREAM: u64 = 2;
const EVAL_STREAM: u64 = 3;

/// Seeds shared by every variant at one (density, seed index) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedSeeds {
    pub maze: u64,
    pub train: u64,
    pub eval: u64,
}

impl PairedSeeds {
    pub fn derive(master: u64, density_index: usize, seed_index: usize) -> Self {
        let path = |stream| derive_seed(master, &[stream, density_index as u64, seed_index as u64]);
        Self {
            maze: path(MAZE_STREAM),
            train: path(TRAIN_STREAM),
            eval: path(EVAL_STREAM),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub frame: u64,
    pub relative_length: f64,
}

/// Stored next to a checkpoint so `eval` can rebuild the agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub variant: String,
    pub density: f64,
    pub seed_index: usize,
    pub seeds: PairedSeeds,
    pub trainer: TrainerConfig,
    pub final_relative_length: f64,
    pub episodes: usize,
    pub goals: usize,
    pub train_steps: u64,
}

#[derive(Debug, Clone)]
pub struct MazeRun {
    pub info: RunInfo,
    pub maze: MazeSpec,
    pub trace: Vec<TraceRow>,
    pub evals: Vec<EvalRow>,
    pub dir: PathBuf,
}

pub fn run_dir(out: &Path, variant: &str, density: f64, seed_index: usize) -> PathBuf {
    out.join(variant)
        .join(format!("density-{density:.2}"))
        .join(format!("seed-{seed_index:02}"))
}

/// Frames at which the policy is evaluated: every `interval` frames and
/// always at the end of training.
fn eval_frames(total: u64, interval: u64) -> Vec<u64> {
    let mut frames: Vec<u64> = if interval == 0 {
        Vec::new()
    } else {
        (1..=total / interval).map(|i| i * interval).collect()
    };
    if frames.last() != Some(&total) {
        frames.push(total);
    }
    frames
}

/// Trains one agent on one maze and writes its artifacts into `dir`.
pub fn train_single(
    suite: &MazeSuiteConfig,
    variant: &str,
    density: f64,
    seed_index: usize,
    seeds: PairedSeeds,
    dir: &Path,
) -> Result<MazeRun> {
    let maze = generate_maze_with(suite.template(), seeds.maze, density)?;
    let trainer_cfg = TrainerConfig {
        variant: variant.to_string(),
        ..suite.trainer.clone()
    };
    let registry = StrategyRegistry::with_defaults();
    let mut trainer = Trainer::new(MazeEnv::new(maze.clone())?, trainer_cfg.clone(), seeds.train, &registry)?;

    let mut evals = Vec::new();
    for frame in eval_frames(trainer_cfg.total_frames, suite.eval_interval) {
        trainer.run_until(frame)?;
        let agent = trainer.agent().with_mode(suite.eval_mode);
        let mut rng = derive_rng(seeds.eval, &[frame]);
        let lengths = relative_lengths(&agent, &maze, suite.eval_episodes, &mut rng)?;
        evals.push(EvalRow {
            frame,
            relative_length: lengths.iter().sum::<f64>() / lengths.len() as f64,
        });
    }
    let outcome = trainer.finish()?;
    let info = RunInfo {
        variant: variant.to_string(),
        density,
        seed_index,
        seeds,
        trainer: trainer_cfg,
        final_relative_length: evals.last().map(|e| e.relative_length).unwrap_or(f64::NAN),
        episodes: outcome.episodes.len(),
        goals: outcome.episodes.iter().filter(|e| e.reached_goal).count(),
        train_steps: outcome.train_steps,
    };

    write_csv(&dir.join("trace.csv"), &outcome.trace)?;
    write_csv(&dir.join("eval.csv"), &evals)?;
    write_json(&dir.join("maze.json"), &maze)?;
    write_json(&dir.join("run.json"), &info)?;
    if suite.checkpoints {
        save_checkpoint(&outcome.agent.net, dir, "net")?;
    }
    Ok(MazeRun {
        info,
        maze,
        trace: outcome.trace,
        evals,
        dir: dir.to_path_buf(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub variant: String,
    pub density: f64,
    pub seeds: usize,
    pub mean_relative_length: f64,
    pub std_relative_length: f64,
    pub relative_lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRun {
    pub variant: String,
    pub density: f64,
    pub seed_index: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazeSummary {
    pub groups: Vec<GroupSummary>,
    pub failed: Vec<FailedRun>,
}

impl MazeSummary {
    pub fn group(&self, variant: &str, density: f64) -> Option<&GroupSummary> {
        self.groups
            .iter()
            .find(|g| g.variant == variant && g.density == density)
    }
}

#[derive(Debug, Clone)]
struct Job {
    variant: String,
    density_index: usize,
    density: f64,
    seed_index: usize,
}

fn jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for variant in &cfg.maze.variants {
        for (density_index, &density) in cfg.maze.densities.iter().enumerate() {
            for seed_index in 0..cfg.seeds {
                out.push(Job {
                    variant: variant.clone(),
                    density_index,
                    density,
                    seed_index,
                });
            }
        }
    }
    out
}

pub fn sub_seeds(cfg: &ExperimentConfig) -> Vec<SubSeed> {
    let mut seeds = Vec::new();
    for (d, &density) in cfg.maze.densities.iter().enumerate() {
        for i in 0..cfg.seeds {
            let p = PairedSeeds::derive(cfg.seed, d, i);
            let label = format!("density-{density:.2}/seed-{i:02}");
            seeds.push(SubSeed { label: format!("{label}/maze"), seed: p.maze });
            seeds.push(SubSeed { label: format!("{label}/train"), seed: p.train });
            seeds.push(SubSeed { label: format!("{label}/eval"), seed: p.eval });
        }
    }
    seeds
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("workers: {e}")))
}

/// Runs every variant × density × seed, writing per-run artifacts as each
/// run finishes and a summary over the runs that completed.
pub fn run_maze_suite(cfg: &ExperimentConfig) -> Result<(MazeSummary, Vec<MazeRun>)> {
    cfg.validate()?;
    let registry = StrategyRegistry::with_defaults();
    for v in &cfg.maze.variants {
        registry.create(v).map_err(|e| match e {
            explorer_core::Error::UnknownStrategy(name) => {
                HarnessError::Config(format!("maze.variants: unknown strategy `{name}`"))
            }
            other => other.into(),
        })?;
    }
    RunManifest::new("maze-run", cfg, sub_seeds(cfg)).write(&cfg.out)?;

    let results: Vec<(Job, Result<MazeRun>)> = thread_pool(cfg.workers)?.install(|| {
        jobs(cfg)
            .into_par_iter()
            .map(|job| {
                let seeds = PairedSeeds::derive(cfg.seed, job.density_index, job.seed_index);
                let dir = run_dir(&cfg.out, &job.variant, job.density, job.seed_index);
                let run = train_single(&cfg.maze, &job.variant, job.density, job.seed_index, seeds, &dir);
                (job, run)
            })
            .collect()
    });

    let mut runs = Vec::new();
    let mut failed = Vec::new();
    let mut first_error = None;
    for (job, result) in results {
        match result {
            Ok(run) => runs.push(run),
            Err(e) => {
                failed.push(FailedRun {
                    variant: job.variant,
                    density: job.density,
                    seed_index: job.seed_index,
                    error: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }

    let mut groups = Vec::new();
    for variant in &cfg.maze.variants {
        for &density in &cfg.maze.densities {
            let lengths: Vec<f64> = runs
                .iter()
                .filter(|r| &r.info.variant == variant && r.info.density == density)
                .map(|r| r.info.final_relative_length)
                .collect();
            if lengths.is_empty() {
                continue;
            }
            let (mean, std) = mean_std(&lengths);
            groups.push(GroupSummary {
                variant: variant.clone(),
                density,
                seeds: lengths.len(),
                mean_relative_length: mean,
                std_relative_length: std,
                relative_lengths: lengths,
            });
        }
    }
    let summary = MazeSummary { groups, failed };
    write_json(&cfg.out.join("summary.json"), &summary)?;
    match first_error {
        Some(e) => Err(e),
        None => Ok((summary, runs)),
    }
}
