//! Finite-horizon linear MDP with a known feature map.
//!
//! Transition probabilities are `P(s' | s, a) = ⟨φ(s, a), μ(s')⟩` and the
//! mean reward is `⟨φ(s, a), θ⟩`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::seed::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMdpSpec {
    pub num_states: usize,
    pub num_actions: usize,
    pub feature_dim: usize,
    pub horizon: usize,
    /// `features[s][a]` is φ(s, a).
    pub features: Vec<Vec<Vec<f64>>>,
    /// `next_state_measures[s']` is μ(s').
    pub next_state_measures: Vec<Vec<f64>>,
    pub reward_weights: Vec<f64>,
    /// Half-width of uniform reward noise; observed rewards stay in [0, 1].
    pub reward_noise: f64,
    pub initial_state: usize,
}

const PROB_TOL: f64 = 1e-9;

impl LinearMdpSpec {
    /// Tabular MDP written as a linear MDP with one-hot features of
    /// dimension `S·A`.
    pub fn tabular(
        kernel: &[Vec<Vec<f64>>],
        rewards: &[Vec<f64>],
        horizon: usize,
        initial_state: usize,
    ) -> Result<Self> {
        let num_states = kernel.len();
        let num_actions = kernel.first().map_or(0, Vec::len);
        let d = num_states * num_actions;
        let slot = |s: usize, a: usize| s * num_actions + a;

        let mut features = vec![vec![vec![0.0; d]; num_actions]; num_states];
        let mut measures = vec![vec![0.0; d]; num_states];
        let mut theta = vec![0.0; d];
        for s in 0..num_states {
            if kernel[s].len() != num_actions || rewards.get(s).map(Vec::len) != Some(num_actions) {
                return Err(Error::Dimension(format!("state {s} has a ragged action table")));
            }
            for a in 0..num_actions {
                features[s][a][slot(s, a)] = 1.0;
                theta[slot(s, a)] = rewards[s][a];
                if kernel[s][a].len() != num_states {
                    return Err(Error::Dimension(format!(
                        "P(.|{s},{a}) has {} entries",
                        kernel[s][a].len()
                    )));
                }
                for (sp, &p) in kernel[s][a].iter().enumerate() {
                    measures[sp][slot(s, a)] = p;
                }
            }
        }
        let spec = Self {
            num_states,
            num_actions,
            feature_dim: d,
            horizon,
            features,
            next_state_measures: measures,
            reward_weights: theta,
            reward_noise: 0.0,
            initial_state,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_states == 0 || self.num_actions == 0 || self.horizon == 0 {
            return Err(Error::InvalidInput("empty linear MDP".into()));
        }
        if self.initial_state >= self.num_states {
            return Err(Error::InvalidInput("initial state out of range".into()));
        }
        if self.reward_weights.len() != self.feature_dim
            || self.next_state_measures.len() != self.num_states
            || self.features.len() != self.num_states
        {
            return Err(Error::Dimension("linear MDP tables do not match".into()));
        }
        for s in 0..self.num_states {
            if self.features[s].len() != self.num_actions {
                return Err(Error::Dimension(format!("state {s} feature table")));
            }
            for a in 0..self.num_actions {
                let phi = &self.features[s][a];
                if phi.len() != self.feature_dim {
                    return Err(Error::Dimension(format!("φ({s},{a}) length {}", phi.len())));
                }
                if norm(phi) > 1.0 + PROB_TOL {
                    return Err(Error::InvalidInput(format!("‖φ({s},{a})‖ exceeds 1")));
                }
                let r = self.mean_reward(s, a);
                if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&r) {
                    return Err(Error::InvalidInput(format!("r({s},{a}) = {r} outside [0,1]")));
                }
                let probs = self.transition_probs(s, a);
                if probs.iter().any(|&p| p < -PROB_TOL)
                    || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-6
                {
                    return Err(Error::InvalidInput(format!(
                        "P(.|{s},{a}) is not a distribution"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn feature(&self, s: usize, a: usize) -> &[f64] {
        &self.features[s][a]
    }

    pub fn transition_probs(&self, s: usize, a: usize) -> Vec<f64> {
        let phi = self.feature(s, a);
        self.next_state_measures
            .iter()
            .map(|mu| dot(phi, mu).max(0.0))
            .collect()
    }

    pub fn mean_reward(&self, s: usize, a: usize) -> f64 {
        dot(self.feature(s, a), &self.reward_weights)
    }

    /// Samples `(s', r)`.
    pub fn step(&self, s: usize, a: usize, rng: &mut Rng) -> Result<(usize, f64)> {
        if s >= self.num_states || a >= self.num_actions {
            return Err(Error::InvalidInput(format!("invalid pair ({s}, {a})")));
        }
        let probs = self.transition_probs(s, a);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = self.num_states - 1;
        for (sp, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                next = sp;
                break;
            }
        }
        let mut r = self.mean_reward(s, a);
        if self.reward_noise > 0.0 {
            r = (r + rng.random_range(-self.reward_noise..=self.reward_noise)).clamp(0.0, 1.0);
        }
        Ok((next, r))
    }

    /// Exact finite-horizon dynamic programming: `q[t][s][a]` and `v[t][s]`
    /// for `t = 0..horizon`, with `v[horizon] = 0`.
    pub fn optimal_values(&self) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>) {
        let h = self.horizon;
        let mut v = vec![vec![0.0; self.num_states]; h + 1];
        let mut q = vec![vec![vec![0.0; self.num_actions]; self.num_states]; h];
        for t in (0..h).rev() {
            for s in 0..self.num_states {
                for a in 0..self.num_actions {
                    let future: f64 = self
                        .transition_probs(s, a)
                        .iter()
                        .zip(&v[t + 1])
                        .map(|(p, vn)| p * vn)
                        .sum();
                    q[t][s][a] = self.mean_reward(s, a) + future;
                }
                v[t][s] = q[t][s].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            }
        }
        (q, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    fn two_state_chain() -> LinearMdpSpec {
        // a0 stays, a1 swaps.
        let kernel = vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        ];
        let rewards = vec![vec![0.0, 0.5], vec![1.0, 0.0]];
        LinearMdpSpec::tabular(&kernel, &rewards, 2, 0).unwrap()
    }

    #[test]
    fn deterministic_chain_follows_kernel() {
        let spec = two_state_chain();
        let mut rng = rng_from(0);
        assert_eq!(spec.step(0, 0, &mut rng).unwrap(), (0, 0.0));
        assert_eq!(spec.step(0, 1, &mut rng).unwrap(), (1, 0.5));
        assert_eq!(spec.step(1, 1, &mut rng).unwrap(), (0, 0.0));
    }

    #[test]
    fn zero_reward_weights_give_zero_reward() {
        let mut spec = two_state_chain();
        spec.reward_weights.iter_mut().for_each(|w| *w = 0.0);
        let mut rng = rng_from(1);
        for _ in 0..50 {
            assert_eq!(spec.step(1, 0, &mut rng).unwrap().1, 0.0);
        }
    }

    #[test]
    fn sampled_frequencies_match_kernel() {
        let kernel = vec![
            vec![vec![0.2, 0.5, 0.3]],
            vec![vec![1.0, 0.0, 0.0]],
            vec![vec![0.0, 0.0, 1.0]],
        ];
        let rewards = vec![vec![0.0], vec![0.0], vec![0.0]];
        let spec = LinearMdpSpec::tabular(&kernel, &rewards, 1, 0).unwrap();
        let mut rng = rng_from(2);
        let n = 10_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[spec.step(0, 0, &mut rng).unwrap().0] += 1;
        }
        for (c, p) in counts.iter().zip([0.2, 0.5, 0.3]) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.02);
        }
    }

    #[test]
    fn rejects_non_distribution() {
        let kernel = vec![vec![vec![0.5, 0.2]], vec![vec![0.0, 1.0]]];
        let rewards = vec![vec![0.0], vec![0.0]];
        assert!(LinearMdpSpec::tabular(&kernel, &rewards, 1, 0).is_err());
    }

    #[test]
    fn dp_on_chain() {
        let spec = two_state_chain();
        let (q, v) = spec.optimal_values();
        // From state 0 with two steps: swap (0.5) then leave state 1 via a0 (1.0).
        assert_eq!(v[0][0], 1.5);
        assert_eq!(q[1][1][0], 1.0);
    }
}
