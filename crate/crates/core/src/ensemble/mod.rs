//! Bootstrapped value ensemble: a shared trunk with `K` heads whose spread
//! serves as an exploration bonus.

mod adam;
mod checkpoint;
mod mlp;
mod net;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest};
pub use mlp::{Activation, Dense, Mlp, MlpCache, ParamSet};
pub use net::{
    init_net, population_std, sync_target, BackpropOutput, BootstrappedNet, Gradients, TargetNet,
    GRAD_CLIP_NORM,
};
