//! Experiment configuration: one JSON document holding the parameter sets of
//! every subcommand. Unset fields take their defaults and unknown keys are
//! rejected. Validation errors carry the dotted path of the offending key.

use std::fs;
use std::path::{Path, PathBuf};

use explorer_core::bebu::{EvalMode, TrainerConfig};
use explorer_core::envs::MazeSpec;
use explorer_core::regress::{FitConfig, GeneratorSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub seeds: usize,
    pub workers: usize,
    pub out: PathBuf,
    pub maze: MazeSuiteConfig,
    pub lsvi_verify: LsviVerifyConfig,
    pub regress_demo: RegressDemoConfig,
    pub bonus_trace: BonusTraceConfig,
    pub eval: EvalConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            seeds: 10,
            workers: 1,
            out: PathBuf::from("runs"),
            maze: MazeSuiteConfig::default(),
            lsvi_verify: LsviVerifyConfig::default(),
            regress_demo: RegressDemoConfig::default(),
            bonus_trace: BonusTraceConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MazeSuiteConfig {
    pub trainer: TrainerConfig,
    pub variants: Vec<String>,
    pub densities: Vec<f64>,
    pub width: usize,
    pub height: usize,
    pub slip_prob: f64,
    pub noise_scale: f64,
    pub max_steps: usize,
    /// Frames between evaluations during training; 0 evaluates only at the end.
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub eval_mode: EvalMode,
    pub checkpoints: bool,
}

impl Default for MazeSuiteConfig {
    fn default() -> Self {
        let template = MazeSpec::default();
        Self {
            trainer: TrainerConfig::default(),
            variants: vec!["bebu".into(), "ob2i".into()],
            densities: vec![0.3],
            width: template.width,
            height: template.height,
            slip_prob: template.slip_prob,
            noise_scale: template.noise_scale,
            max_steps: template.max_steps,
            eval_interval: 10_000,
            eval_episodes: 20,
            eval_mode: EvalMode::SampledHead,
            checkpoints: true,
        }
    }
}

impl MazeSuiteConfig {
    /// Wall-free template carrying the configured size and dynamics.
    pub fn template(&self) -> MazeSpec {
        let mut spec = MazeSpec::empty(self.width, self.height);
        spec.slip_prob = self.slip_prob;
        spec.noise_scale = self.noise_scale;
        spec.max_steps = self.max_steps;
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsviVerifyConfig {
    pub designs: usize,
    pub max_dim: usize,
    pub max_points: usize,
    pub lambdas: Vec<f64>,
    pub probes_per_design: usize,
    pub samples: usize,
    pub tolerance: f64,
    pub bootstrap_designs: usize,
    pub bootstrap_points: usize,
    pub bootstrap_replicates: usize,
    pub bootstrap_tolerance: f64,
}

impl Default for LsviVerifyConfig {
    fn default() -> Self {
        Self {
            designs: 20,
            max_dim: 8,
            max_points: 100,
            lambdas: vec![0.1, 1.0, 10.0],
            probes_per_design: 1,
            samples: 100_000,
            tolerance: 0.05,
            bootstrap_designs: 3,
            bootstrap_points: 500,
            bootstrap_replicates: 4000,
            bootstrap_tolerance: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RegressDemoConfig {
    pub generator: GeneratorSpec,
    pub fit: FitConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BonusTraceConfig {
    /// Trailing moving-average window over training steps.
    pub window: usize,
    /// Post-process an existing `trace.csv` instead of training a fresh
    /// agent with the maze settings.
    pub trace: Option<PathBuf>,
    pub density: f64,
}

impl Default for BonusTraceConfig {
    fn default() -> Self {
        Self {
            window: 50,
            trace: None,
            density: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// A per-seed run directory written by `maze-run`.
    pub run_dir: Option<PathBuf>,
    pub episodes: usize,
    pub mode: EvalMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            run_dir: None,
            episodes: 20,
            mode: EvalMode::SampledHead,
        }
    }
}

fn range_error(key: &str, msg: &str) -> HarnessError {
    HarnessError::Config(format!("{key}: {msg}"))
}

fn ensure(ok: bool, key: &str, msg: &str) -> Result<(), HarnessError> {
    if ok {
        Ok(())
    } else {
        Err(range_error(key, msg))
    }
}

/// Re-roots a core validation message (`"beta: ..."`) under `prefix`.
fn nested(prefix: &str, err: explorer_core::Error) -> HarnessError {
    match err {
        explorer_core::Error::InvalidInput(msg) => HarnessError::Config(format!("{prefix}.{msg}")),
        other => HarnessError::Core(other),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        ensure(self.seeds >= 1, "seeds", "must be at least 1")?;
        ensure(self.workers >= 1, "workers", "must be at least 1")?;

        let m = &self.maze;
        m.trainer.validate().map_err(|e| nested("maze.trainer", e))?;
        ensure(!m.variants.is_empty(), "maze.variants", "must not be empty")?;
        ensure(!m.densities.is_empty(), "maze.densities", "must not be empty")?;
        for &d in &m.densities {
            ensure((0.0..1.0).contains(&d), "maze.densities", "values must lie in [0, 1)")?;
        }
        ensure(m.width >= 2 && m.height >= 2, "maze.width", "maze must be at least 2x2")?;
        ensure((0.0..=1.0).contains(&m.slip_prob), "maze.slip_prob", "must lie in [0, 1]")?;
        ensure(
            (0.0..0.5).contains(&m.noise_scale),
            "maze.noise_scale",
            "must lie in [0, 0.5)",
        )?;
        ensure(m.max_steps >= 1, "maze.max_steps", "must be positive")?;
        ensure(m.eval_episodes >= 1, "maze.eval_episodes", "must be positive")?;

        let l = &self.lsvi_verify;
        ensure(l.max_dim >= 1, "lsvi_verify.max_dim", "must be positive")?;
        ensure(l.max_points >= 1, "lsvi_verify.max_points", "must be positive")?;
        ensure(
            !l.lambdas.is_empty() && l.lambdas.iter().all(|&x| x > 0.0 && x.is_finite()),
            "lsvi_verify.lambdas",
            "must be a non-empty list of positive values",
        )?;
        ensure(l.probes_per_design >= 1, "lsvi_verify.probes_per_design", "must be positive")?;
        ensure(l.samples >= 1000, "lsvi_verify.samples", "must be at least 1000")?;
        ensure(l.tolerance > 0.0, "lsvi_verify.tolerance", "must be positive")?;
        ensure(
            l.bootstrap_replicates >= 2,
            "lsvi_verify.bootstrap_replicates",
            "must be at least 2",
        )?;
        ensure(l.bootstrap_points >= 1, "lsvi_verify.bootstrap_points", "must be positive")?;
        ensure(
            l.bootstrap_tolerance > 0.0,
            "lsvi_verify.bootstrap_tolerance",
            "must be positive",
        )?;

        self.regress_demo
            .generator
            .validate()
            .map_err(|e| nested("regress_demo.generator", e))?;
        self.regress_demo.fit.validate().map_err(|e| nested("regress_demo.fit", e))?;

        ensure(self.bonus_trace.window >= 1, "bonus_trace.window", "must be positive")?;
        ensure(
            (0.0..1.0).contains(&self.bonus_trace.density),
            "bonus_trace.density",
            "must lie in [0, 1)",
        )?;
        ensure(self.eval.episodes >= 1, "eval.episodes", "must be positive")?;
        Ok(())
    }

    /// Parses a config document. A run manifest is accepted too, in which
    /// case its resolved config is used.
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let mut value: Value = serde_json::from_str(text).map_err(HarnessError::parse)?;
        if value.get("manifest_version").is_some() {
            if let Some(cfg) = value.get("config") {
                value = cfg.clone();
            }
        }
        let cfg: Self = serde_json::from_value(value).map_err(HarnessError::parse)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Applies `key=value` overrides, where `key` is a dotted path and
    /// `value` is JSON (bare words are taken as strings).
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, HarnessError> {
        let mut doc = serde_json::to_value(self).expect("config serialises");
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("override `{item}` is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
            set_path(&mut doc, key, value)?;
        }
        let cfg: Self = serde_json::from_value(doc).map_err(HarnessError::parse)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<(), HarnessError> {
    let unknown = || HarnessError::Config(format!("{key}: unknown key"));
    let mut parts = key.split('.').peekable();
    let mut node = doc;
    while let Some(part) = parts.next() {
        let map = node.as_object_mut().ok_or_else(unknown)?;
        if parts.peek().is_none() {
            // Optional fields serialise as null and are still known keys.
            if !map.contains_key(part) {
                return Err(unknown());
            }
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.get_mut(part).ok_or_else(unknown)?;
    }
    Err(unknown())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_takes_table_defaults() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        let t = &cfg.maze.trainer;
        assert_eq!(t.heads, 10);
        assert_eq!((t.gamma, t.beta, t.lr), (0.9, 1.0, 0.001));
        assert_eq!((t.alpha1, t.alpha2), (0.01, 0.01));
        assert_eq!(cfg.seeds, 10);
        assert_eq!(t.total_frames, 50_000);
        let maze_only = ExperimentConfig::from_json(r#"{"maze": {}}"#).unwrap();
        assert_eq!(maze_only, cfg);
    }

    #[test]
    fn out_of_range_value_names_the_key() {
        let err = ExperimentConfig::from_json(r#"{"maze": {"trainer": {"beta": 1.5}}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("beta"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"lsvi_verify": {"samples": 10}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("lsvi_verify.samples"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"mazes": {}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"maze": {"trainer": {"kappa": 1}}}"#).is_err());
        assert!(ExperimentConfig::from_json("[1, 2").is_err());
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = ExperimentConfig::default()
            .with_overrides(&["maze.trainer.gamma=0.8".into(), "maze.variants=[\"ob2i\"]".into()])
            .unwrap();
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_json(), cfg.to_json());
    }

    #[test]
    fn overrides_follow_dotted_paths() {
        let cfg = ExperimentConfig::default()
            .with_overrides(&[
                "seed=7".into(),
                "maze.trainer.variant=bebu-ids".into(),
                "eval.run_dir=some/dir".into(),
            ])
            .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.maze.trainer.variant, "bebu-ids");
        assert_eq!(cfg.eval.run_dir, Some(PathBuf::from("some/dir")));
        let err = ExperimentConfig::default()
            .with_overrides(&["maze.trainer.betta=0.5".into()])
            .unwrap_err();
        assert!(err.to_string().contains("maze.trainer.betta"));
        let err = ExperimentConfig::default()
            .with_overrides(&["maze.trainer.beta=2".into()])
            .unwrap_err();
        assert!(err.to_string().contains("maze.trainer.beta"));
    }

    #[test]
    fn manifest_documents_are_accepted() {
        let cfg = ExperimentConfig {
            seed: 42,
            ..ExperimentConfig::default()
        };
        let doc = serde_json::json!({"manifest_version": 1, "config": cfg});
        assert_eq!(ExperimentConfig::from_json(&doc.to_string()).unwrap(), cfg);
    }
}
