use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::suites::{bonus, eval, lsvi_verify, maze, regress_demo};

#[derive(Debug, Parser)]
#[command(name = "explorer", version, about = "Ensemble-bonus exploration experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Subcommand, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Train every variant on generated mazes and summarise relative lengths.
    MazeRun,
    /// Compare sampled posterior spreads with the closed-form linear bonus.
    LsviVerify,
    /// Fit a regression ensemble across a data gap and emit its bands.
    RegressDemo,
    /// Smooth a training bonus trace and check its rise-then-fall shape.
    BonusTrace,
    /// Evaluate a saved checkpoint on its maze.
    Eval,
}

#[derive(Debug, Args, Default, Clone)]
pub struct CommonArgs {
    /// JSON config or run manifest.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seeds: Option<usize>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Override one field by dotted path, e.g. `maze.trainer.beta=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
}

/// Config file (or defaults), then the dedicated flags, then `--set`.
pub fn resolve_config(args: &CommonArgs) -> Result<ExperimentConfig> {
    let base = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    let mut overrides = Vec::new();
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(out) = &args.out {
        overrides.push(format!("out={}", Value::String(out.display().to_string())));
    }
    if let Some(seeds) = args.seeds {
        overrides.push(format!("seeds={seeds}"));
    }
    if let Some(workers) = args.workers {
        overrides.push(format!("workers={workers}"));
    }
    overrides.extend(args.overrides.iter().cloned());
    base.with_overrides(&overrides)
}

/// Runs one subcommand and returns its headline report.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Value> {
    std::fs::create_dir_all(&cfg.out)?;
    Ok(match command {
        Command::MazeRun => serde_json::to_value(maze::run_maze_suite(cfg)?.0)?,
        Command::LsviVerify => serde_json::to_value(lsvi_verify::run_lsvi_verify(cfg)?.0)?,
        Command::RegressDemo => serde_json::to_value(regress_demo::run_regress_demo(cfg)?)?,
        Command::BonusTrace => serde_json::to_value(bonus::run_bonus_trace(cfg)?)?,
        Command::Eval => serde_json::to_value(eval::run_eval(cfg)?)?,
    })
}

pub fn error_line(kind: &str, message: &str) -> String {
    json!({"error": {"kind": kind, "message": message}}).to_string()
}
