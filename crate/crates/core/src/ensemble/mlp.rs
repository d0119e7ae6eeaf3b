use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::seed::Rng;

/// Anything whose parameters can be visited as a flat list of tensors, in a
/// fixed order. Optimizers, gradient buffers and checkpoints rely on it.
pub trait ParamSet {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    fn squared_norm(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.iter()).map(|x| x * x).sum()
    }

    fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
        }
    }

    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Fully connected layer; `weights` is `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weights: Matrix::zeros(output, input),
            bias: vec![0.0; output],
        }
    }

    /// Uniform in `±1/√fan_in` for weights and biases.
    pub fn init(input: usize, output: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (input.max(1) as f64).sqrt();
        let mut layer = Self::zeros(input, output);
        for w in layer.weights.as_mut_slice() {
            *w = rng.random_range(-bound..bound);
        }
        for b in layer.bias.iter_mut() {
            *b = rng.random_range(-bound..bound);
        }
        layer
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        (0..self.output_dim())
            .map(|o| dot(self.weights.row(o), x) + self.bias[o])
            .collect()
    }
}

/// Multilayer perceptron. Every layer but the last uses ReLU; the last uses
/// `output_activation`. An MLP with no layers is the identity map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub output_activation: Activation,
}

/// Per-layer inputs and pre-activations of one forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

impl Mlp {
    /// `dims = [in, h1, ..., out]`.
    pub fn new(dims: &[usize], output_activation: Activation, rng: &mut Rng) -> Self {
        let layers = dims
            .windows(2)
            .map(|w| Dense::init(w[0], w[1], rng))
            .collect();
        Self {
            layers,
            output_activation,
        }
    }

    pub fn identity() -> Self {
        Self {
            layers: Vec::new(),
            output_activation: Activation::Identity,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.input_dim(), l.output_dim()))
                .collect(),
            output_activation: self.output_activation,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.layers.first().map(Dense::input_dim)
    }

    pub fn output_dim(&self) -> Option<usize> {
        self.layers.last().map(Dense::output_dim)
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output_activation
        } else {
            Activation::Relu
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let act = self.activation(i);
            h = layer.affine(&h).into_iter().map(|z| act.apply(z)).collect();
        }
        h
    }

    pub fn forward_cached(&self, x: &[f64]) -> MlpCache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&h);
            let act = self.activation(i);
            let next = z.iter().map(|&v| act.apply(v)).collect();
            inputs.push(h);
            pre.push(z);
            h = next;
        }
        MlpCache {
            inputs,
            pre,
            output: h,
        }
    }

    /// Backpropagates `grad_out` (∂L/∂output) through the cached pass,
    /// accumulating parameter gradients into `grads` and returning ∂L/∂input.
    pub fn backward(&self, cache: &MlpCache, grad_out: &[f64], grads: &mut Mlp) -> Vec<f64> {
        let mut g = grad_out.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let act = self.activation(i);
            for (gj, &z) in g.iter_mut().zip(&cache.pre[i]) {
                *gj *= act.derivative(z);
            }
            let input = &cache.inputs[i];
            let glayer = &mut grads.layers[i];
            let mut g_in = vec![0.0; layer.input_dim()];
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                glayer.bias[o] += go;
                for ((gw, &xi), (gi, &w)) in glayer
                    .weights
                    .row_mut(o)
                    .iter_mut()
                    .zip(input)
                    .zip(g_in.iter_mut().zip(layer.weights.row(o)))
                {
                    *gw += go * xi;
                    *gi += go * w;
                }
            }
            g = g_in;
        }
        g
    }

    pub fn check_input(&self, x: &[f64]) -> Result<()> {
        match self.input_dim() {
            Some(d) if d != x.len() => Err(Error::Dimension(format!(
                "input of length {} for a network expecting {d}",
                x.len()
            ))),
            _ => Ok(()),
        }
    }
}

impl ParamSet for Mlp {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    #[test]
    fn identity_mlp_passes_through() {
        assert_eq!(Mlp::identity().forward(&[1.0, -2.0]), vec![1.0, -2.0]);
    }

    #[test]
    fn single_layer_is_affine() {
        let mut mlp = Mlp::new(&[2, 2], Activation::Identity, &mut rng_from(0));
        mlp.layers[0].weights = Matrix::from_vec(2, 2, vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        mlp.layers[0].bias = vec![0.1, -0.2];
        let y = mlp.forward(&[3.0, 4.0]);
        assert!((y[0] - 11.1).abs() < 1e-12 && (y[1] - (-1.2)).abs() < 1e-12);
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let mlp = Mlp::new(&[16, 8], Activation::Identity, &mut rng_from(1));
        assert!(mlp.flat().iter().all(|w| w.abs() <= 0.25));
        assert_eq!(mlp.param_count(), 16 * 8 + 8);
    }
}
