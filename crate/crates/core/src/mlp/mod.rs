//! Minimal feedforward network engine: dense layers, pointwise activations,
//! transmit-power normalization, Adam, and finite-difference checks.

mod adam;
pub mod gradcheck;
pub mod io;
mod matrix;
mod network;

pub use adam::AdamState;
pub use gradcheck::grad_check;
pub use matrix::Matrix;
pub use network::{
    sigmoid, ActivationKind, DenseLayer, ForwardCache, Gradients, Layer, MlpNetwork,
    PowerNormLayer, PowerNormMode,
};
