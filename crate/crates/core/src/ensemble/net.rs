use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Mlp, ParamSet};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed::derive_rng;

/// Global gradient-norm ceiling applied after the per-head trunk scaling.
pub const GRAD_CLIP_NORM: f64 = 10.0;

/// Shared trunk feeding `K` independent heads, each producing one value per
/// action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrappedNet {
    pub trunk: Mlp,
    pub heads: Vec<Mlp>,
    pub input_dim: usize,
    pub num_actions: usize,
    pub seed: u64,
}

/// Builds a net whose trunk has ReLU layers of the given widths and whose
/// heads are single linear layers. Trunk and each head draw from their own
/// seed stream, so heads differ only through initialization.
pub fn init_net(
    input_dim: usize,
    hidden: &[usize],
    num_actions: usize,
    heads: usize,
    seed: u64,
) -> Result<BootstrappedNet> {
    if heads < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 heads, got {heads}")));
    }
    if input_dim == 0 || num_actions == 0 || hidden.contains(&0) {
        return Err(Error::InvalidInput("network dimensions must be positive".into()));
    }
    let trunk = if hidden.is_empty() {
        Mlp::identity()
    } else {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        Mlp::new(&dims, Activation::Relu, &mut derive_rng(seed, &[0]))
    };
    let feat = hidden.last().copied().unwrap_or(input_dim);
    let heads = (0..heads)
        .map(|k| {
            Mlp::new(
                &[feat, num_actions],
                Activation::Identity,
                &mut derive_rng(seed, &[1, k as u64]),
            )
        })
        .collect();
    Ok(BootstrappedNet {
        trunk,
        heads,
        input_dim,
        num_actions,
        seed,
    })
}

/// Population standard deviation (divide by n), Welford's update.
pub fn population_std(values: &[f64]) -> f64 {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    if values.is_empty() {
        0.0
    } else {
        (m2 / values.len() as f64).max(0.0).sqrt()
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

impl BootstrappedNet {
    pub fn num_heads(&self) -> usize {
        self.heads.len()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.trunk.layers.iter().map(|l| l.output_dim()).collect()
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.input_dim {
            return Err(Error::Dimension(format!(
                "state of length {} for a net with input {}",
                state.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// `K × |A|` matrix of head values; row `k` is `Q^k(s, ·)`.
    pub fn forward_all(&self, state: &[f64]) -> Result<Matrix> {
        self.check_state(state)?;
        let features = self.trunk.forward(state);
        let mut out = Matrix::zeros(self.num_heads(), self.num_actions);
        for (k, head) in self.heads.iter().enumerate() {
            out.row_mut(k).copy_from_slice(&head.forward(&features));
        }
        Ok(out)
    }

    /// Values of a single head; cheaper than [`Self::forward_all`].
    pub fn forward_head(&self, state: &[f64], head: usize) -> Result<Vec<f64>> {
        self.check_state(state)?;
        let h = self
            .heads
            .get(head)
            .ok_or_else(|| Error::InvalidInput(format!("head {head} out of range")))?;
        Ok(h.forward(&self.trunk.forward(state)))
    }

    /// Disagreement bonus: standard deviation across heads of `Q^k(s, a)`.
    pub fn ucb_bonus(&self, state: &[f64], action: usize) -> Result<f64> {
        let q = self.forward_all(state)?;
        head_column(&q, action).map(|c| population_std(&c))
    }

    /// Mean head value plus `alpha` times the disagreement bonus.
    pub fn optimistic_q(&self, state: &[f64], action: usize, alpha: f64) -> Result<f64> {
        let q = self.forward_all(state)?;
        let col = head_column(&q, action)?;
        let bonus = population_std(&col);
        let m = mean(&col);
        Ok(if bonus == 0.0 { m } else { m + alpha * bonus })
    }

    /// Exact gradient of `(1/T) Σ_k Σ_t (y[k,t] − Q^k(s_t, a_t))²`, unscaled
    /// and unclipped.
    pub fn loss_and_gradients(
        &self,
        states: &[Vec<f64>],
        actions: &[usize],
        targets: &Matrix,
    ) -> Result<(f64, Gradients)> {
        let t_len = states.len();
        let k = self.num_heads();
        if actions.len() != t_len || targets.rows() != k || targets.cols() != t_len {
            return Err(Error::Dimension(format!(
                "{} states, {} actions, {}x{} targets for {k} heads",
                t_len,
                actions.len(),
                targets.rows(),
                targets.cols()
            )));
        }
        if t_len == 0 {
            return Err(Error::InvalidInput("empty training batch".into()));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut loss = 0.0;
        let scale = 1.0 / t_len as f64;
        let mut grad_out = vec![0.0; self.num_actions];
        for (t, (s, &a)) in states.iter().zip(actions).enumerate() {
            self.check_state(s)?;
            if a >= self.num_actions {
                return Err(Error::InvalidInput(format!("action {a} out of range")));
            }
            let trunk_cache = self.trunk.forward_cached(s);
            let feat = &trunk_cache.output;
            let mut g_feat = vec![0.0; feat.len()];
            for (h, head) in self.heads.iter().enumerate() {
                let cache = head.forward_cached(feat);
                let err = targets.get(h, t) - cache.output[a];
                loss += scale * err * err;
                grad_out.iter_mut().for_each(|g| *g = 0.0);
                grad_out[a] = -2.0 * scale * err;
                let g = head.backward(&cache, &grad_out, &mut grads.heads[h]);
                for (acc, gi) in g_feat.iter_mut().zip(&g) {
                    *acc += gi;
                }
            }
            if !self.trunk.is_identity() {
                self.trunk.backward(&trunk_cache, &g_feat, &mut grads.trunk);
            }
        }
        Ok((loss, grads))
    }

    /// Training gradient: exact gradient with the trunk part divided by `K`,
    /// then clipped to global norm [`GRAD_CLIP_NORM`].
    pub fn backprop_mse(
        &self,
        states: &[Vec<f64>],
        actions: &[usize],
        targets: &Matrix,
    ) -> Result<BackpropOutput> {
        let (loss, mut grads) = self.loss_and_gradients(states, actions, targets)?;
        grads.trunk.scale(1.0 / self.num_heads() as f64);
        let norm = grads.global_norm();
        if !loss.is_finite() || !norm.is_finite() {
            return Err(Error::TrainingDivergence(format!(
                "loss {loss}, gradient norm {norm}"
            )));
        }
        if norm > GRAD_CLIP_NORM {
            grads.scale(GRAD_CLIP_NORM / norm);
        }
        Ok(BackpropOutput {
            loss,
            grads,
            pre_clip_norm: norm,
        })
    }
}

fn head_column(q: &Matrix, action: usize) -> Result<Vec<f64>> {
    if action >= q.cols() {
        return Err(Error::InvalidInput(format!("action {action} out of range")));
    }
    Ok((0..q.rows()).map(|k| q.get(k, action)).collect())
}

impl ParamSet for BootstrappedNet {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.trunk.tensors();
        for h in &self.heads {
            t.extend(h.tensors());
        }
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.trunk.tensors_mut();
        for h in self.heads.iter_mut() {
            t.extend(h.tensors_mut());
        }
        t
    }
}

/// Gradient buffers shaped like a [`BootstrappedNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub trunk: Mlp,
    pub heads: Vec<Mlp>,
}

impl Gradients {
    pub fn zeros_like(net: &BootstrappedNet) -> Self {
        Self {
            trunk: net.trunk.zeros_like(),
            heads: net.heads.iter().map(Mlp::zeros_like).collect(),
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.squared_norm().sqrt()
    }
}

impl ParamSet for Gradients {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.trunk.tensors();
        for h in &self.heads {
            t.extend(h.tensors());
        }
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.trunk.tensors_mut();
        for h in self.heads.iter_mut() {
            t.extend(h.tensors_mut());
        }
        t
    }
}

#[derive(Debug, Clone)]
pub struct BackpropOutput {
    pub loss: f64,
    pub grads: Gradients,
    pub pre_clip_norm: f64,
}

/// Frozen copy of a net used for bootstrapped next-state values.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetNet(BootstrappedNet);

impl TargetNet {
    pub fn net(&self) -> &BootstrappedNet {
        &self.0
    }

    pub fn forward_all(&self, state: &[f64]) -> Result<Matrix> {
        self.0.forward_all(state)
    }
}

pub fn sync_target(net: &BootstrappedNet) -> TargetNet {
    TargetNet(net.clone())
}
