//! Checks that the sampled posterior spread of `φᵀw` matches the closed-form
//! linear bonus, on random designs plus two hand-checkable ones.

use explorer_core::linalg::Matrix;
use explorer_core::lsvi::{bootstrap_variance, posterior_variance_oracle, LinearDesign, VarianceEstimate};
use explorer_core::seed::{derive_rng, Rng};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::manifest::{RunManifest, SubSeed};
use crate::output::{write_csv, write_json};

const POSTERIOR_STREAM: u64 = 10;
const BOOTSTRAP_STREAM: u64 = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub design: usize,
    pub kind: String,
    pub dim: usize,
    pub points: usize,
    pub lambda: f64,
    pub probe: usize,
    /// `√(φᵀΛ⁻¹φ)`.
    pub closed_form: f64,
    /// Standard deviation of the sampled `φᵀw`.
    pub monte_carlo: f64,
    /// Relative error of the variances.
    pub rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsviReport {
    pub rows: usize,
    pub tolerance: f64,
    pub max_rel_error: f64,
    pub passed: bool,
    pub bootstrap_rows: usize,
    pub bootstrap_tolerance: f64,
    pub bootstrap_max_rel_error: f64,
    pub bootstrap_passed: bool,
}

fn row(
    design: usize,
    kind: &str,
    d: &LinearDesign,
    probe: usize,
    est: VarianceEstimate,
    tolerance: f64,
) -> EquivalenceRow {
    let rel_error = est.rel_error();
    EquivalenceRow {
        design,
        kind: kind.to_string(),
        dim: d.dim(),
        points: d.phi.rows(),
        lambda: d.lambda,
        probe,
        closed_form: est.closed_form.sqrt(),
        monte_carlo: est.sampled.sqrt(),
        rel_error,
        passed: rel_error <= tolerance,
    }
}

fn random_probe(dim: usize, rng: &mut Rng) -> Vec<f64> {
    let scale = 1.0 / (dim as f64).sqrt();
    (0..dim)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Designs checked in order: a prior-only design, the scalar
/// single-observation design, then the random ones.
fn designs(cfg: &ExperimentConfig) -> Result<Vec<(String, LinearDesign, Vec<Vec<f64>>)>> {
    let l = &cfg.lsvi_verify;
    let mut out = vec![
        (
            "zero-data".to_string(),
            LinearDesign {
                phi: Matrix::from_rows(&[], 3)?,
                targets: Vec::new(),
                lambda: 2.0,
            },
            vec![vec![1.0, -2.0, 0.5]],
        ),
        (
            "scalar".to_string(),
            LinearDesign {
                phi: Matrix::from_rows(&[vec![1.0]], 1)?,
                targets: vec![0.0],
                lambda: 1.0,
            },
            vec![vec![1.0]],
        ),
    ];
    for i in 0..l.designs {
        let mut rng = derive_rng(cfg.seed, &[POSTERIOR_STREAM, i as u64, 0]);
        let dim = rng.random_range(1..=l.max_dim);
        let points = rng.random_range(1..=l.max_points);
        let lambda = l.lambdas[i % l.lambdas.len()];
        let design = LinearDesign::random(dim, points, lambda, &mut rng)?;
        let probes = (0..l.probes_per_design).map(|_| random_probe(dim, &mut rng)).collect();
        out.push(("random".to_string(), design, probes));
    }
    Ok(out)
}

pub fn run_lsvi_verify(cfg: &ExperimentConfig) -> Result<(LsviReport, Vec<EquivalenceRow>, Vec<EquivalenceRow>)> {
    cfg.validate()?;
    let l = &cfg.lsvi_verify;
    let seeds = vec![SubSeed {
        label: "posterior-and-bootstrap".into(),
        seed: cfg.seed,
    }];
    RunManifest::new("lsvi-verify", cfg, seeds).write(&cfg.out)?;

    let mut rows = Vec::new();
    for (i, (kind, design, probes)) in designs(cfg)?.iter().enumerate() {
        for (p, probe) in probes.iter().enumerate() {
            let mut rng = derive_rng(cfg.seed, &[POSTERIOR_STREAM, i as u64, 1 + p as u64]);
            let est = posterior_variance_oracle(design, probe, l.samples, &mut rng)?;
            rows.push(row(i, kind, design, p, est, l.tolerance));
        }
    }

    let mut boot_rows = Vec::new();
    for i in 0..l.bootstrap_designs {
        let mut rng = derive_rng(cfg.seed, &[BOOTSTRAP_STREAM, i as u64]);
        let dim = rng.random_range(1..=l.max_dim);
        let lambda = l.lambdas[i % l.lambdas.len()];
        let design = LinearDesign::random(dim, l.bootstrap_points, lambda, &mut rng)?;
        let probe = random_probe(dim, &mut rng);
        let est = bootstrap_variance(&design, &probe, l.bootstrap_replicates, &mut rng)?;
        boot_rows.push(row(i, "bootstrap", &design, 0, est, l.bootstrap_tolerance));
    }

    let max = |rs: &[EquivalenceRow]| rs.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    let report = LsviReport {
        rows: rows.len(),
        tolerance: l.tolerance,
        max_rel_error: max(&rows),
        passed: rows.iter().all(|r| r.passed),
        bootstrap_rows: boot_rows.len(),
        bootstrap_tolerance: l.bootstrap_tolerance,
        bootstrap_max_rel_error: max(&boot_rows),
        bootstrap_passed: boot_rows.iter().all(|r| r.passed),
    };
    write_csv(&cfg.out.join("lsvi_verify.csv"), &rows)?;
    write_csv(&cfg.out.join("lsvi_bootstrap.csv"), &boot_rows)?;
    write_json(&cfg.out.join("report.json"), &report)?;
    Ok((report, rows, boot_rows))
}
