//! Re-evaluates a checkpoint written by `maze-run`.

use explorer_core::bebu::{relative_lengths, StrategyRegistry, TrainedAgent};
use explorer_core::ensemble::load_checkpoint;
use explorer_core::envs::MazeSpec;
use explorer_core::seed::derive_rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::manifest::{RunManifest, SubSeed};
use crate::output::{read_json, write_json};
use crate::suites::maze::RunInfo;

const EVAL_STREAM: u64 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub variant: String,
    pub episodes: usize,
    pub mean_relative_length: f64,
    pub relative_lengths: Vec<f64>,
}

pub fn run_eval(cfg: &ExperimentConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let dir = cfg
        .eval
        .run_dir
        .as_ref()
        .ok_or_else(|| HarnessError::Config("eval.run_dir: required".into()))?;
    let info: RunInfo = read_json(&dir.join("run.json"))?;
    let maze: MazeSpec = read_json(&dir.join("maze.json"))?;
    maze.validate()?;
    let net = load_checkpoint(dir, "net")?;
    let agent = TrainedAgent::new(
        net,
        &info.variant,
        info.trainer.selector_params(),
        &StrategyRegistry::with_defaults(),
    )?
    .with_mode(cfg.eval.mode);

    RunManifest::new("eval", cfg, vec![SubSeed { label: "eval".into(), seed: cfg.seed }]).write(&cfg.out)?;
    let mut rng = derive_rng(cfg.seed, &[EVAL_STREAM]);
    let lengths = relative_lengths(&agent, &maze, cfg.eval.episodes, &mut rng)?;
    let report = EvalReport {
        variant: info.variant,
        episodes: lengths.len(),
        mean_relative_length: lengths.iter().sum::<f64>() / lengths.len() as f64,
        relative_lengths: lengths,
    };
    write_json(&cfg.out.join("eval.json"), &report)?;
    Ok(report)
}
