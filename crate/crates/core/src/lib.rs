//! Two-way relay simulation with learned physical-layer network coding.
//!
//! The terminal modulator, the relay's denoising mapper and the terminal
//! demodulator are small neural networks trained jointly, end to end through
//! the multiple-access and broadcast channel hops, to minimize bitwise cross
//! entropy. An amplify-and-forward relay with exact bitwise soft demapping is
//! provided as the reference system.

pub mod error;
pub mod mlp;

pub use error::{Error, Result};
pub mod channel;
pub mod system;
pub mod baselines;
pub mod evaluation;
pub mod persist;
