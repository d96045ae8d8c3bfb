//! From-scratch CNN stack: layer kernels, a small graph runtime with exact
//! analytic gradients, residual/autoencoder presets, and the training loop
//! with AWGN augmentation.

mod graph;
mod layers;
mod network;
mod presets;
mod train;

pub use graph::{InputRef, LayerKind, LayerNode, NetSpec, Shape};
pub use network::{sigmoid, Grads, Network, OptimKind, Optimizer, PTensor, TensorVal, Trace};
pub use presets::{build_preset, Preset};
pub use train::{
    augment_awgn, augment_with_domain, forward_batch, loss_bce, loss_joint, train, AdcpmRecipe,
    DlSample, EpochRow, NoiseDomain, OptimizerChoice, TrainConfig, TrainLog, PROB_EPS,
};
