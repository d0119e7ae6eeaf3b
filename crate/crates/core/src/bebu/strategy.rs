//! Exploration strategies, registered by name and chosen at runtime.

use std::collections::BTreeMap;

use rand::Rng as _;

use crate::ensemble::{population_std, BootstrappedNet};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed::Rng;

/// Constants the action selectors may need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorParams {
    pub lambda_ucb: f64,
    pub lambda_ids: f64,
    pub rho: f64,
    pub eps_ids: f64,
}

impl Default for SelectorParams {
    fn default() -> Self {
        Self {
            lambda_ucb: 0.1,
            lambda_ids: 0.1,
            rho: 1.0,
            eps_ids: 1e-5,
        }
    }
}

/// How a variant acts and whether its training targets carry bonuses.
pub trait ExplorationStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether the backward targets use the `α₁`/`α₂` bonus terms.
    fn optimistic_targets(&self) -> bool;

    /// Greedy action for `state`; `head` is the episode's sampled head.
    fn greedy_action(
        &self,
        net: &BootstrappedNet,
        state: &[f64],
        head: usize,
        params: &SelectorParams,
    ) -> Result<usize>;
}

/// Lowest index among the maximisers.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Lowest index among the minimisers.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Per-action ensemble mean and population standard deviation.
pub fn ensemble_moments(q: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let k = q.rows() as f64;
    (0..q.cols())
        .map(|a| {
            let col: Vec<f64> = (0..q.rows()).map(|h| q.get(h, a)).collect();
            (col.iter().sum::<f64>() / k, population_std(&col))
        })
        .unzip()
}

/// `argmax_a Q̄(a) + λ·σ(a)`.
pub fn ucb_choice(mean: &[f64], std: &[f64], lambda: f64) -> usize {
    let scores: Vec<f64> = mean.iter().zip(std).map(|(m, s)| m + lambda * s).collect();
    argmax(&scores)
}

/// `argmin_a Δ̂(a)² / I(a)` with `Δ̂(a) = max u − l(a)` and
/// `I(a) = ln(1 + σ(a)²/ρ²) + ε`.
pub fn ids_choice(mean: &[f64], std: &[f64], p: &SelectorParams) -> usize {
    let upper = mean
        .iter()
        .zip(std)
        .map(|(m, s)| m + p.lambda_ids * s)
        .fold(f64::NEG_INFINITY, f64::max);
    let ratios: Vec<f64> = mean
        .iter()
        .zip(std)
        .map(|(m, s)| {
            let regret = upper - (m - p.lambda_ids * s);
            let info = (1.0 + s * s / (p.rho * p.rho)).ln() + p.eps_ids;
            regret * regret / info
        })
        .collect();
    argmin(&ratios)
}

struct SampledHead {
    name: &'static str,
    optimistic: bool,
}

impl ExplorationStrategy for SampledHead {
    fn name(&self) -> &'static str {
        self.name
    }

    fn optimistic_targets(&self) -> bool {
        self.optimistic
    }

    fn greedy_action(
        &self,
        net: &BootstrappedNet,
        state: &[f64],
        head: usize,
        _: &SelectorParams,
    ) -> Result<usize> {
        Ok(argmax(&net.forward_head(state, head)?))
    }
}

struct UpperConfidence;

impl ExplorationStrategy for UpperConfidence {
    fn name(&self) -> &'static str {
        "bebu-ucb"
    }

    fn optimistic_targets(&self) -> bool {
        false
    }

    fn greedy_action(
        &self,
        net: &BootstrappedNet,
        state: &[f64],
        _: usize,
        p: &SelectorParams,
    ) -> Result<usize> {
        let (mean, std) = ensemble_moments(&net.forward_all(state)?);
        Ok(ucb_choice(&mean, &std, p.lambda_ucb))
    }
}

struct InformationDirected;

impl ExplorationStrategy for InformationDirected {
    fn name(&self) -> &'static str {
        "bebu-ids"
    }

    fn optimistic_targets(&self) -> bool {
        false
    }

    fn greedy_action(
        &self,
        net: &BootstrappedNet,
        state: &[f64],
        _: usize,
        p: &SelectorParams,
    ) -> Result<usize> {
        let (mean, std) = ensemble_moments(&net.forward_all(state)?);
        Ok(ids_choice(&mean, &std, p))
    }
}

/// ε-greedy wrapper. One uniform draw is always consumed before the ε test,
/// and a second only when exploring, so streams stay aligned across variants
/// that explore identically.
pub fn select_action(
    strategy: &dyn ExplorationStrategy,
    net: &BootstrappedNet,
    state: &[f64],
    epsilon: f64,
    head: usize,
    params: &SelectorParams,
    rng: &mut Rng,
) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} outside [0, 1]")));
    }
    let u: f64 = rng.random();
    if u < epsilon {
        Ok(rng.random_range(0..net.num_actions))
    } else {
        strategy.greedy_action(net, state, head, params)
    }
}

pub type StrategyFactory = fn() -> Box<dyn ExplorationStrategy>;

/// Name → constructor table.
#[derive(Clone)]
pub struct StrategyRegistry {
    factories: BTreeMap<String, StrategyFactory>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// `bebu`, `bebu-ucb`, `bebu-ids` and `ob2i`.
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register("bebu", || {
            Box::new(SampledHead {
                name: "bebu",
                optimistic: false,
            })
        });
        r.register("bebu-ucb", || Box::new(UpperConfidence));
        r.register("bebu-ids", || Box::new(InformationDirected));
        r.register("ob2i", || {
            Box::new(SampledHead {
                name: "ob2i",
                optimistic: true,
            })
        });
        r
    }

    pub fn register(&mut self, name: &str, factory: StrategyFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn create(&self, name: &str) -> Result<Box<dyn ExplorationStrategy>> {
        self.factories
            .get(name)
            .map(|f| f())
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}
