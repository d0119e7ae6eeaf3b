//! One-dimensional regression with an ensemble of independently initialised
//! networks. Where data is dense the members agree; across a gap in the data
//! they disagree, and the spread serves as an uncertainty band.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ensemble::{population_std, Activation, AdamConfig, AdamState, Mlp, ParamSet};
use crate::error::{Error, Result};
use crate::seed::{derive_rng, derive_seed};

/// Target function and sampling layout of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    /// Points drawn uniformly inside each interval, split evenly.
    pub intervals: Vec<(f64, f64)>,
    pub points: usize,
    pub noise: f64,
    /// `f(x) = Σ amplitude · sin(frequency · x)`.
    pub components: Vec<(f64, f64)>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            intervals: vec![(-1.0, -0.3), (0.3, 1.0)],
            points: 60,
            noise: 0.05,
            components: vec![(1.0, 3.0), (0.5, 7.0)],
        }
    }
}

impl GeneratorSpec {
    pub fn target(&self, x: f64) -> f64 {
        self.components.iter().map(|&(amp, freq)| amp * (freq * x).sin()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points == 0 || self.intervals.is_empty() {
            return Err(Error::InvalidInput("dataset needs points and intervals".into()));
        }
        if self.intervals.iter().any(|&(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidInput("intervals must be finite with lo < hi".into()));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::InvalidInput("noise must be non-negative".into()));
        }
        Ok(())
    }

    /// Open stretches between consecutive sampling intervals.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        let mut sorted = self.intervals.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        sorted
            .windows(2)
            .filter(|w| w[0].1 < w[1].0)
            .map(|w| (w[0].1, w[1].0))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionDataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub generator: GeneratorSpec,
}

impl RegressionDataset {
    pub fn generate(generator: GeneratorSpec, seed: u64) -> Result<Self> {
        generator.validate()?;
        let mut rng = derive_rng(seed, &[0]);
        let per = generator.points / generator.intervals.len();
        let extra = generator.points % generator.intervals.len();
        let mut x = Vec::with_capacity(generator.points);
        for (i, &(lo, hi)) in generator.intervals.iter().enumerate() {
            let n = per + usize::from(i < extra);
            x.extend((0..n).map(|_| rng.random_range(lo..hi)));
        }
        let y = x
            .iter()
            .map(|&xi| {
                let z: f64 = rng.sample(StandardNormal);
                generator.target(xi) + generator.noise * z
            })
            .collect();
        Ok(Self { x, y, generator })
    }

    pub fn from_points(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidInput("need matching, non-empty x and y".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dataset values must be finite".into()));
        }
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let generator = GeneratorSpec {
            intervals: vec![(lo, hi.max(lo + f64::EPSILON))],
            points: x.len(),
            noise: 0.0,
            components: Vec::new(),
        };
        Ok(Self { x, y, generator })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub members: usize,
    pub epochs: usize,
    pub hidden: Vec<usize>,
    pub lr: f64,
    /// Evaluation grid: `grid_points` evenly spaced values over `grid_range`.
    pub grid_range: (f64, f64),
    pub grid_points: usize,
    /// Give every member the same initial weights (degenerate ensemble).
    pub identical_init: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            members: 20,
            epochs: 2000,
            hidden: vec![32, 32],
            lr: 0.01,
            grid_range: (-1.2, 1.2),
            grid_points: 241,
            identical_init: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::InvalidInput(format!("{key}: {msg}")));
        if self.members < 2 {
            return bad("members", "must be at least 2");
        }
        if self.hidden.contains(&0) {
            return bad("hidden", "widths must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr", "must be positive");
        }
        if self.grid_points < 2 || !(self.grid_range.0 < self.grid_range.1) {
            return bad("grid_points", "need at least two points over a non-empty range");
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = self.grid_range;
        let step = (hi - lo) / (self.grid_points - 1) as f64;
        (0..self.grid_points).map(|i| lo + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleFit {
    pub members: Vec<Mlp>,
    pub final_losses: Vec<f64>,
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// `mean + std`.
    pub g_plus: Vec<f64>,
}

impl EnsembleFit {
    /// Mean of `std` over grid points inside any of `ranges` (closed).
    pub fn mean_std_over(&self, ranges: &[(f64, f64)]) -> Option<f64> {
        let vals: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.std)
            .filter(|(x, _)| ranges.iter().any(|&(lo, hi)| (lo..=hi).contains(*x)))
            .map(|(_, s)| *s)
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}

fn mse_gradients(net: &Mlp, data: &RegressionDataset, grads: &mut Mlp) -> f64 {
    grads.scale(0.0);
    let n = data.len() as f64;
    let mut loss = 0.0;
    for (&x, &y) in data.x.iter().zip(&data.y) {
        let cache = net.forward_cached(&[x]);
        let err = cache.output[0] - y;
        loss += err * err / n;
        net.backward(&cache, &[2.0 * err / n], grads);
    }
    loss
}

fn fit_member(net: &mut Mlp, data: &RegressionDataset, cfg: &FitConfig) -> Result<f64> {
    let mut adam = AdamState::new(AdamConfig::with_lr(cfg.lr), net);
    let mut grads = net.zeros_like();
    let mut loss = f64::NAN;
    for _ in 0..cfg.epochs {
        loss = mse_gradients(net, data, &mut grads);
        if !loss.is_finite() || !grads.all_finite() {
            return Err(Error::TrainingDivergence(format!("regression loss {loss}")));
        }
        adam.step(net, &grads)?;
    }
    Ok(if cfg.epochs == 0 {
        mse_gradients(net, data, &mut grads)
    } else {
        loss
    })
}

/// Trains `cfg.members` networks on the same data, each from its own
/// initialisation, and summarises them on the evaluation grid.
pub fn fit_ensemble(data: &RegressionDataset, cfg: &FitConfig, seed: u64) -> Result<EnsembleFit> {
    cfg.validate()?;
    let mut dims = vec![1];
    dims.extend_from_slice(&cfg.hidden);
    dims.push(1);
    let mut members = Vec::with_capacity(cfg.members);
    let mut final_losses = Vec::with_capacity(cfg.members);
    for i in 0..cfg.members {
        let stream = if cfg.identical_init { 0 } else { i as u64 };
        let mut rng = derive_rng(derive_seed(seed, &[1]), &[stream]);
        let mut net = Mlp::new(&dims, Activation::Identity, &mut rng);
        final_losses.push(fit_member(&mut net, data, cfg)?);
        members.push(net);
    }
    let grid = cfg.grid();
    let mut mean = Vec::with_capacity(grid.len());
    let mut std = Vec::with_capacity(grid.len());
    let mut preds = vec![0.0; members.len()];
    for &x in &grid {
        for (p, m) in preds.iter_mut().zip(&members) {
            *p = m.forward(&[x])[0];
        }
        mean.push(preds.iter().sum::<f64>() / preds.len() as f64);
        std.push(population_std(&preds));
    }
    let g_plus = mean.iter().zip(&std).map(|(m, s)| m + s).collect();
    Ok(EnsembleFit {
        members,
        final_losses,
        grid,
        mean,
        std,
        g_plus,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub x: f64,
    pub mean: f64,
    pub std: f64,
    pub lower_2std: f64,
    pub upper_2std: f64,
    pub g_plus: f64,
}

/// Plot-ready rows; the one-sigma band is `mean ± std`, its upper edge `g_plus`.
pub fn emit_bands(fit: &EnsembleFit) -> Vec<BandRow> {
    fit.grid
        .iter()
        .enumerate()
        .map(|(i, &x)| BandRow {
            x,
            mean: fit.mean[i],
            std: fit.std[i],
            lower_2std: fit.mean[i] - 2.0 * fit.std[i],
            upper_2std: fit.mean[i] + 2.0 * fit.std[i],
            g_plus: fit.g_plus[i],
        })
        .collect()
}
