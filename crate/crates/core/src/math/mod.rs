//! Numerical kernel: matrices, dense layers, losses, Adam and the seeded RNG.

pub mod adam;
pub mod layer;
pub mod loss;
pub mod matrix;
pub mod rng;
pub mod stats;

pub use adam::{AdamConfig, AdamState};
pub use layer::{apply_stack, backward_stack, forward_stack, Activation, DenseLayer, LayerGrads};
pub use loss::{bce_loss, mae};
pub use matrix::Matrix;
pub use rng::{Rng, Stream};
