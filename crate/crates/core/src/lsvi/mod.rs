//! Least-squares value iteration with a UCB bonus on linear MDPs.
//!
//! After every episode the per-step Gram matrices `Λ_t = λI + Σ φφᵀ` and
//! weights `w_t` are rebuilt backward from `t = T−1` to `0`, and
//! `Q_t(s, a) = min{w_tᵀφ + α √(φᵀΛ_t⁻¹φ), T}`.

mod posterior;

pub use posterior::{
    bootstrap_variance, posterior_variance_oracle, LinearDesign, VarianceEstimate,
};

use serde::{Deserialize, Serialize};

use crate::envs::LinearMdpSpec;
use crate::error::{Error, Result};
use crate::linalg::{add_outer, dot, quad_form, rank1_inverse_update, Cholesky, Matrix};
use crate::seed::Rng;

/// Ridge state of one step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramState {
    pub step: usize,
    pub gram: Matrix,
    pub gram_inv: Matrix,
    pub weights: Vec<f64>,
    pub lambda: f64,
    pub alpha: f64,
    pub horizon: usize,
}

impl GramState {
    /// No data yet: `Λ = λI`, `w = 0`.
    pub fn fresh(step: usize, dim: usize, lambda: f64, alpha: f64, horizon: usize) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self {
            step,
            gram: Matrix::scaled_identity(dim, lambda),
            gram_inv: Matrix::scaled_identity(dim, 1.0 / lambda),
            weights: vec![0.0; dim],
            lambda,
            alpha,
            horizon,
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Adds one feature to `Λ`, updating `Λ⁻¹` by Sherman–Morrison. The
    /// weights are left alone; they only change on a backward pass.
    pub fn observe(&mut self, phi: &[f64]) -> Result<()> {
        self.gram_inv = rank1_inverse_update(&self.gram_inv, phi)?;
        add_outer(&mut self.gram, phi, 1.0);
        Ok(())
    }

    /// `√(φᵀΛ⁻¹φ)`.
    pub fn bonus(&self, phi: &[f64]) -> Result<f64> {
        Ok(quad_form(&self.gram_inv, phi)?.sqrt())
    }

    pub fn q_value(&self, phi: &[f64]) -> Result<f64> {
        if phi.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "feature of length {} for a {}-dim state",
                phi.len(),
                self.dim()
            )));
        }
        let optimistic = dot(&self.weights, phi) + self.alpha * self.bonus(phi)?;
        Ok(optimistic.min(self.horizon as f64))
    }
}

pub fn q_value(state: &GramState, phi: &[f64]) -> Result<f64> {
    state.q_value(phi)
}

pub fn ucb_bonus_linear(state: &GramState, phi: &[f64]) -> Result<f64> {
    state.bonus(phi)
}

/// Argmax over actions of `Q_t`; ties go to the lowest index.
pub fn greedy_action(states: &[GramState], t: usize, features: &[Vec<f64>]) -> Result<usize> {
    let state = states
        .get(t)
        .ok_or_else(|| Error::InvalidInput(format!("no step state for t = {t}")))?;
    let mut best = (0, f64::NEG_INFINITY);
    for (a, phi) in features.iter().enumerate() {
        let q = state.q_value(phi)?;
        if q > best.1 {
            best = (a, q);
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryStep {
    pub feature: Vec<f64>,
    pub reward: f64,
    /// φ(x_{t+1}, a) for every action; empty on the last step.
    pub next_features: Vec<Vec<f64>>,
}

pub type EpisodeSteps = Vec<HistoryStep>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHistory {
    pub episodes: Vec<EpisodeSteps>,
}

impl EpisodeHistory {
    pub fn push(&mut self, episode: EpisodeSteps) {
        self.episodes.push(episode);
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }
}

/// Rebuilds every step's ridge state from the whole history, going backward
/// from `t = horizon − 1`. The returned vector is indexed by `t`.
pub fn lsvi_backward_pass(
    history: &EpisodeHistory,
    dim: usize,
    lambda: f64,
    alpha: f64,
    horizon: usize,
) -> Result<Vec<GramState>> {
    let mut states: Vec<Option<GramState>> = vec![None; horizon];
    for t in (0..horizon).rev() {
        let mut state = GramState::fresh(t, dim, lambda, alpha, horizon)?;
        let mut rhs = vec![0.0; dim];
        for (i, ep) in history.episodes.iter().enumerate() {
            let step = ep.get(t).ok_or_else(|| {
                Error::Dimension(format!("episode {i} has {} steps, horizon {horizon}", ep.len()))
            })?;
            if step.feature.len() != dim {
                return Err(Error::Dimension(format!(
                    "episode {i} step {t}: feature length {}",
                    step.feature.len()
                )));
            }
            let mut target = step.reward;
            if let Some(next) = states.get(t + 1).and_then(Option::as_ref) {
                let mut best = f64::NEG_INFINITY;
                for phi in &step.next_features {
                    best = best.max(next.q_value(phi)?);
                }
                if best.is_finite() {
                    target += best;
                }
            }
            add_outer(&mut state.gram, &step.feature, 1.0);
            crate::linalg::axpy(&mut rhs, target, &step.feature);
        }
        let chol = Cholesky::factor(&state.gram)?;
        state.weights = chol.solve(&rhs)?;
        state.gram_inv = chol.inverse();
        states[t] = Some(state);
    }
    Ok(states.into_iter().map(Option::unwrap).collect())
}

/// Per-episode outcome of an LSVI-UCB run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsviEpisodeLog {
    pub episode: usize,
    pub return_: f64,
    pub regret: f64,
}

#[derive(Debug, Clone)]
pub struct LsviRun {
    pub states: Vec<GramState>,
    pub history: EpisodeHistory,
    pub log: Vec<LsviEpisodeLog>,
}

impl LsviRun {
    /// Greedy action of the final Q-functions at `(t, s)`.
    pub fn policy(&self, spec: &LinearMdpSpec, t: usize, s: usize) -> Result<usize> {
        let feats: Vec<Vec<f64>> = (0..spec.num_actions)
            .map(|a| spec.feature(s, a).to_vec())
            .collect();
        greedy_action(&self.states, t, &feats)
    }
}

/// Runs LSVI-UCB for `episodes` episodes. Regret is measured against the
/// exact optimal value of the initial state.
pub fn run_lsvi_ucb(
    spec: &LinearMdpSpec,
    episodes: usize,
    lambda: f64,
    alpha: f64,
    rng: &mut Rng,
) -> Result<LsviRun> {
    spec.validate()?;
    let (d, h) = (spec.feature_dim, spec.horizon);
    let (_, v_star) = spec.optimal_values();
    let v0 = v_star[0][spec.initial_state];
    let features_at = |s: usize| -> Vec<Vec<f64>> {
        (0..spec.num_actions).map(|a| spec.feature(s, a).to_vec()).collect()
    };

    let mut states = (0..h)
        .map(|t| GramState::fresh(t, d, lambda, alpha, h))
        .collect::<Result<Vec<_>>>()?;
    let mut history = EpisodeHistory::default();
    let mut log = Vec::with_capacity(episodes);

    for m in 0..episodes {
        let mut s = spec.initial_state;
        let mut steps = Vec::with_capacity(h);
        let mut ret = 0.0;
        for t in 0..h {
            let feats = features_at(s);
            let a = greedy_action(&states, t, &feats)?;
            let (next, r) = spec.step(s, a, rng)?;
            ret += r;
            steps.push(HistoryStep {
                feature: feats[a].clone(),
                reward: r,
                next_features: if t + 1 < h { features_at(next) } else { Vec::new() },
            });
            s = next;
        }
        history.push(steps);
        states = lsvi_backward_pass(&history, d, lambda, alpha, h)?;
        log.push(LsviEpisodeLog {
            episode: m,
            return_: ret,
            regret: v0 - ret,
        });
    }
    Ok(LsviRun { states, history, log })
}
