//! Mean batch bonus over training, smoothed, with a rise-then-fall check:
//! the smoothed curve peaks after warm-up (not at its first point) and ends
//! below half of its peak.

use std::path::Path;

use explorer_core::bebu::TraceRow;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::manifest::RunManifest;
use crate::output::{read_csv, write_csv, write_json};
use crate::suites::maze::{sub_seeds, train_single, PairedSeeds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonusPoint {
    pub frame: u64,
    pub mean_batch_bonus: f64,
    /// Trailing mean over the last `window` points; empty until the window fills.
    pub smoothed: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrendStatus {
    Evaluated,
    /// Every bonus is zero, so there is no trend to judge.
    NotApplicable,
    /// Fewer points than the smoothing window.
    TooShort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonusSummary {
    pub status: TrendStatus,
    pub warning: Option<String>,
    pub window: usize,
    pub points: usize,
    pub learning_starts: u64,
    pub peak_frame: Option<u64>,
    pub peak: Option<f64>,
    pub final_smoothed: Option<f64>,
    pub peak_after_warmup: Option<bool>,
    pub ends_below_half_peak: Option<bool>,
    pub rise_then_fall: Option<bool>,
}

pub fn bonus_curve(trace: &[TraceRow], window: usize) -> Vec<BonusPoint> {
    let raw: Vec<(u64, f64)> = trace
        .iter()
        .filter_map(|r| r.mean_batch_bonus.map(|b| (r.frame, b)))
        .collect();
    raw.iter()
        .enumerate()
        .map(|(i, &(frame, b))| BonusPoint {
            frame,
            mean_batch_bonus: b,
            smoothed: (i + 1 >= window)
                .then(|| raw[i + 1 - window..=i].iter().map(|p| p.1).sum::<f64>() / window as f64),
        })
        .collect()
}

pub fn summarize(points: &[BonusPoint], window: usize, learning_starts: u64) -> BonusSummary {
    let mut summary = BonusSummary {
        status: TrendStatus::Evaluated,
        warning: None,
        window,
        points: points.len(),
        learning_starts,
        peak_frame: None,
        peak: None,
        final_smoothed: None,
        peak_after_warmup: None,
        ends_below_half_peak: None,
        rise_then_fall: None,
    };
    if points.iter().all(|p| p.mean_batch_bonus == 0.0) && !points.is_empty() {
        summary.status = TrendStatus::NotApplicable;
        return summary;
    }
    let smoothed: Vec<(u64, f64)> = points
        .iter()
        .filter_map(|p| p.smoothed.map(|s| (p.frame, s)))
        .collect();
    if smoothed.len() < 2 {
        summary.status = TrendStatus::TooShort;
        summary.warning = Some(format!(
            "{} bonus points is too few for a smoothing window of {window}",
            points.len()
        ));
        return summary;
    }
    // First maximum wins so a flat curve reports its first point.
    let (peak_idx, &(peak_frame, peak)) = smoothed
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, &(u64, f64))>, (i, p)| match best {
            Some((_, b)) if b.1 >= p.1 => best,
            _ => Some((i, p)),
        })
        .expect("non-empty");
    let final_value = smoothed.last().expect("non-empty").1;
    let after = peak_idx > 0 && peak_frame >= learning_starts;
    let below = final_value < 0.5 * peak;
    summary.peak_frame = Some(peak_frame);
    summary.peak = Some(peak);
    summary.final_smoothed = Some(final_value);
    summary.peak_after_warmup = Some(after);
    summary.ends_below_half_peak = Some(below);
    summary.rise_then_fall = Some(after && below);
    summary
}

/// Writes `bonus.csv` and `bonus_summary.json` into `dir`.
pub fn emit_bonus_trace(
    trace: &[TraceRow],
    window: usize,
    learning_starts: u64,
    dir: &Path,
) -> Result<BonusSummary> {
    let points = bonus_curve(trace, window);
    let summary = summarize(&points, window, learning_starts);
    write_csv(&dir.join("bonus.csv"), &points)?;
    write_json(&dir.join("bonus_summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonusReport {
    pub runs: Vec<BonusSummary>,
    pub evaluated: usize,
    pub rise_then_fall: usize,
}

/// Either post-processes a configured `trace.csv`, or trains one agent per
/// seed with the maze settings and analyses each trace.
pub fn run_bonus_trace(cfg: &ExperimentConfig) -> Result<BonusReport> {
    cfg.validate()?;
    let window = cfg.bonus_trace.window;
    let learning_starts = cfg.maze.trainer.learning_starts;
    let runs = match &cfg.bonus_trace.trace {
        Some(path) => {
            RunManifest::new("bonus-trace", cfg, Vec::new()).write(&cfg.out)?;
            let trace: Vec<TraceRow> = read_csv(path)?;
            vec![emit_bonus_trace(&trace, window, learning_starts, &cfg.out)?]
        }
        None => {
            let density = cfg.bonus_trace.density;
            let seed_cfg = ExperimentConfig {
                maze: crate::config::MazeSuiteConfig {
                    densities: vec![density],
                    ..cfg.maze.clone()
                },
                ..cfg.clone()
            };
            RunManifest::new("bonus-trace", cfg, sub_seeds(&seed_cfg)).write(&cfg.out)?;
            let variant = cfg.maze.trainer.variant.clone();
            let mut runs = Vec::with_capacity(cfg.seeds);
            for i in 0..cfg.seeds {
                let dir = cfg.out.join(format!("seed-{i:02}"));
                let seeds = PairedSeeds::derive(cfg.seed, 0, i);
                let run = train_single(&seed_cfg.maze, &variant, density, i, seeds, &dir)?;
                runs.push(emit_bonus_trace(&run.trace, window, learning_starts, &dir)?);
            }
            runs
        }
    };
    let report = BonusReport {
        evaluated: runs.iter().filter(|s| s.status == TrendStatus::Evaluated).count(),
        rise_then_fall: runs.iter().filter(|s| s.rise_then_fall == Some(true)).count(),
        runs,
    };
    write_json(&cfg.out.join("bonus_report.json"), &report)?;
    Ok(report)
}
