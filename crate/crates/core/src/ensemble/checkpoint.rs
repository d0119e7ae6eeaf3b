//! Weights as raw little-endian `f64` values plus a JSON manifest of shapes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Dense, Mlp, ParamSet};
use super::net::BootstrappedNet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub num_actions: usize,
    pub num_heads: usize,
    pub seed: u64,
    pub param_count: usize,
    /// Tensor shapes in storage order.
    pub tensors: Vec<Vec<usize>>,
}

impl CheckpointManifest {
    pub fn describe(net: &BootstrappedNet) -> Self {
        let mut tensors = Vec::new();
        let mlps = std::iter::once(&net.trunk).chain(&net.heads);
        for mlp in mlps {
            for l in &mlp.layers {
                tensors.push(vec![l.output_dim(), l.input_dim()]);
                tensors.push(vec![l.output_dim()]);
            }
        }
        Self {
            input_dim: net.input_dim,
            hidden: net.hidden_widths(),
            num_actions: net.num_actions,
            num_heads: net.num_heads(),
            seed: net.seed,
            param_count: net.param_count(),
            tensors,
        }
    }

    fn skeleton(&self) -> BootstrappedNet {
        let mut trunk = Mlp {
            layers: Vec::new(),
            output_activation: Activation::Relu,
        };
        let mut prev = self.input_dim;
        for &h in &self.hidden {
            trunk.layers.push(Dense::zeros(prev, h));
            prev = h;
        }
        if trunk.layers.is_empty() {
            trunk = Mlp::identity();
        }
        let head = Mlp {
            layers: vec![Dense::zeros(prev, self.num_actions)],
            output_activation: Activation::Identity,
        };
        BootstrappedNet {
            trunk,
            heads: vec![head; self.num_heads],
            input_dim: self.input_dim,
            num_actions: self.num_actions,
            seed: self.seed,
        }
    }
}

/// Writes `<stem>.bin` and `<stem>.json` into `dir`.
pub fn save_checkpoint(net: &BootstrappedNet, dir: &Path, stem: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let bytes: Vec<u8> = net.flat().iter().flat_map(|x| x.to_le_bytes()).collect();
    fs::write(dir.join(format!("{stem}.bin")), bytes)?;
    let manifest = serde_json::to_string_pretty(&CheckpointManifest::describe(net))?;
    fs::write(dir.join(format!("{stem}.json")), manifest)?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path, stem: &str) -> Result<BootstrappedNet> {
    let manifest: CheckpointManifest =
        serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
    let bytes = fs::read(dir.join(format!("{stem}.bin")))?;
    if bytes.len() != manifest.param_count * 8 {
        return Err(Error::Dimension(format!(
            "checkpoint holds {} bytes, manifest expects {} parameters",
            bytes.len(),
            manifest.param_count
        )));
    }
    let mut net = manifest.skeleton();
    if net.param_count() != manifest.param_count {
        return Err(Error::Dimension("manifest shapes disagree with parameter count".into()));
    }
    let mut values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
    for t in net.tensors_mut() {
        for x in t.iter_mut() {
            *x = values.next().expect("length checked");
        }
    }
    if !net.all_finite() {
        return Err(Error::InvalidInput("checkpoint contains non-finite weights".into()));
    }
    Ok(net)
}
