//! Dense tensors, activations, initialisation and reverse-mode autodiff.

pub mod activation;
pub mod exec;
pub mod init;
pub mod tape;
#[allow(clippy::module_inception)]
mod tensor;

pub use exec::{forward_kernel, LayerState, LayerVars, LayerWeights};
pub use init::{glorot_uniform, init_weights, orthogonal, InitOptions};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
