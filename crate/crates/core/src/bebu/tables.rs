use serde::{Deserialize, Serialize};

use crate::ensemble::{population_std, BootstrappedNet, TargetNet};
use crate::envs::EpisodeRecord;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// When the next-Q bonus mask is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskMode {
    /// Compare the argmax of the diffused table with the executed action at
    /// the moment the target is formed.
    #[default]
    PostDiffusion,
    /// Use the mask built from the target network before any diffusion.
    Precomputed,
}

/// Exponentially weighted second moment of the next-Q bonus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunningStd {
    second_moment: f64,
    decay: f64,
}

const STD_FLOOR: f64 = 1e-8;

impl RunningStd {
    pub fn new(decay: f64) -> Self {
        Self {
            second_moment: 1.0,
            decay,
        }
    }

    pub fn update(&mut self, batch_mean_square: f64) {
        self.second_moment =
            self.decay * self.second_moment + (1.0 - self.decay) * batch_mean_square;
    }

    pub fn std(&self) -> f64 {
        self.second_moment.sqrt().max(STD_FLOOR)
    }
}

impl Default for RunningStd {
    fn default() -> Self {
        Self::new(0.99)
    }
}

/// Next-Q values `Q̃[k, a, t]` for the `T` next states of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    heads: usize,
    actions: usize,
    steps: usize,
    data: Vec<f64>,
}

impl QTable {
    pub fn zeros(heads: usize, actions: usize, steps: usize) -> Self {
        Self {
            heads,
            actions,
            steps,
            data: vec![0.0; heads * actions * steps],
        }
    }

    fn idx(&self, k: usize, a: usize, t: usize) -> usize {
        (k * self.actions + a) * self.steps + t
    }

    pub fn get(&self, k: usize, a: usize, t: usize) -> f64 {
        self.data[self.idx(k, a, t)]
    }

    pub fn set(&mut self, k: usize, a: usize, t: usize, v: f64) {
        let i = self.idx(k, a, t);
        self.data[i] = v;
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Lowest index among the maximisers of `Q̃[k, ·, t]`.
    pub fn argmax(&self, k: usize, t: usize) -> usize {
        let mut best = 0;
        for a in 1..self.actions {
            if self.get(k, a, t) > self.get(k, best, t) {
                best = a;
            }
        }
        best
    }
}

/// Everything the backward pass needs besides rewards and actions.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardTables {
    pub q_tilde: QTable,
    /// Immediate-reward bonus per step, shared by all heads.
    pub b: Vec<f64>,
    /// Normalised next-Q bonus, `K × T`.
    pub b_tilde: Matrix,
    /// Target-network argmax, `[k][t]`.
    pub a_tilde: Vec<Vec<usize>>,
    /// `mask[k][t] ⇔ a_tilde[k][t] ≠ a_{t+1}`; the last column is unused.
    pub mask: Vec<Vec<bool>>,
}

impl BackwardTables {
    pub fn heads(&self) -> usize {
        self.q_tilde.heads
    }

    pub fn steps(&self) -> usize {
        self.q_tilde.steps
    }

    /// Builds tables from raw parts, deriving `Ã` and `M` from `q_tilde`.
    pub fn from_parts(
        q_tilde: QTable,
        b: Vec<f64>,
        b_tilde: Matrix,
        actions: &[usize],
    ) -> Result<Self> {
        let (k, t) = (q_tilde.heads, q_tilde.steps);
        if b.len() != t || b_tilde.rows() != k || b_tilde.cols() != t || actions.len() != t {
            return Err(Error::Dimension("backward table shapes disagree".into()));
        }
        let a_tilde: Vec<Vec<usize>> = (0..k)
            .map(|h| (0..t).map(|s| q_tilde.argmax(h, s)).collect())
            .collect();
        let mask = build_mask(&a_tilde, actions);
        Ok(Self {
            q_tilde,
            b,
            b_tilde,
            a_tilde,
            mask,
        })
    }
}

fn build_mask(a_tilde: &[Vec<usize>], actions: &[usize]) -> Vec<Vec<bool>> {
    a_tilde
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(t, &a)| actions.get(t + 1).is_some_and(|&next| a != next))
                .collect()
        })
        .collect()
}

/// Evaluates both networks over an episode: `B` from the online net at
/// `(s_t, a_t)`, `Q̃` and `Ã` from the target net at `s_{t+1}`, and `B̃` at
/// `(s_{t+1}, Ã[k,t])` divided by the running standard deviation, which is
/// first updated with this episode's mean squared `B̃` over steps `0..T−1`.
pub fn compute_bonus_tables(
    episode: &EpisodeRecord,
    net: &BootstrappedNet,
    target: &TargetNet,
    running: &mut RunningStd,
) -> Result<BackwardTables> {
    let steps = episode.len();
    if steps == 0 {
        return Err(Error::ContractViolation("empty episode".into()));
    }
    let k = net.num_heads();
    let actions_n = net.num_actions;
    let mut q_tilde = QTable::zeros(k, actions_n, steps);
    let mut b = Vec::with_capacity(steps);
    let mut column = vec![0.0; k];
    let mut target_q = Vec::with_capacity(steps);
    for (t, tr) in episode.transitions.iter().enumerate() {
        let online = net.forward_all(&tr.state)?;
        for (h, c) in column.iter_mut().enumerate() {
            *c = online.get(h, tr.action);
        }
        b.push(population_std(&column));

        let next = target.forward_all(&tr.next_state)?;
        for h in 0..k {
            for a in 0..actions_n {
                q_tilde.set(h, a, t, next.get(h, a));
            }
        }
        target_q.push(next);
    }

    let mut b_tilde = Matrix::zeros(k, steps);
    let mut sum_sq = 0.0;
    for (t, next) in target_q.iter().enumerate() {
        for h in 0..k {
            let a = q_tilde.argmax(h, t);
            for (j, c) in column.iter_mut().enumerate() {
                *c = next.get(j, a);
            }
            let raw = population_std(&column);
            b_tilde.set(h, t, raw);
            if t + 1 < steps {
                sum_sq += raw * raw;
            }
        }
    }
    if steps > 1 {
        running.update(sum_sq / (k * (steps - 1)) as f64);
    }
    let scale = 1.0 / running.std();
    for v in b_tilde.as_mut_slice() {
        *v *= scale;
    }
    BackwardTables::from_parts(q_tilde, b, b_tilde, &episode.actions())
}

/// Weights and mixing constants of the backward recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mask_mode: MaskMode,
}

/// `x + w·b`, leaving `x` untouched (bit for bit) when `w` is zero.
fn with_bonus(x: f64, w: f64, b: f64) -> f64 {
    if w == 0.0 {
        x
    } else {
        x + w * b
    }
}

/// Episodic backward targets `y[k, t]`, computed from the last step to the
/// first while diffusing each target into the next-Q table.
pub fn backward_targets(
    rewards: &[f64],
    actions: &[usize],
    tables: &BackwardTables,
    params: &TargetParams,
) -> Result<Matrix> {
    let steps = rewards.len();
    if steps == 0 {
        return Err(Error::ContractViolation("backward targets of an empty episode".into()));
    }
    if actions.len() != steps || tables.steps() != steps {
        return Err(Error::Dimension(format!(
            "{steps} rewards, {} actions, tables for {} steps",
            actions.len(),
            tables.steps()
        )));
    }
    let k = tables.heads();
    let mut q = tables.q_tilde.clone();
    let mut y = Matrix::zeros(k, steps);
    let immediate: Vec<f64> = rewards
        .iter()
        .zip(&tables.b)
        .map(|(&r, &b)| with_bonus(r, params.alpha1, b))
        .collect();
    for h in 0..k {
        y.set(h, steps - 1, immediate[steps - 1]);
    }
    for t in (0..steps - 1).rev() {
        let a_next = actions[t + 1];
        for h in 0..k {
            let diffused =
                params.beta * y.get(h, t + 1) + (1.0 - params.beta) * q.get(h, a_next, t);
            q.set(h, a_next, t, diffused);
            let a_prime = q.argmax(h, t);
            let masked = match params.mask_mode {
                MaskMode::PostDiffusion => a_prime != a_next,
                MaskMode::Precomputed => tables.mask[h][t],
            };
            let next_bonus = if masked { tables.b_tilde.get(h, t) } else { 0.0 };
            let next_q = with_bonus(q.get(h, a_prime, t), params.alpha2, next_bonus);
            y.set(h, t, immediate[t] + params.gamma * next_q);
        }
    }
    Ok(y)
}
