//! End-to-end two-way relay system: configuration, feature plumbing, the
//! differentiable chain, its loss, and training.

mod config;
pub mod features;
mod gradcheck;
pub mod loss;
mod model;
mod train;

pub use config::{CsiMode, SystemConfig, N_DIMS};
pub use gradcheck::system_grad_check;
pub use loss::{bce_loss, bce_loss_grad};
pub use model::{bit_patterns, random_bits, Batch, EndToEnd, SystemGradients, Tape, TwoWaySystem};
pub use train::{train, train_with_progress, TrainOutcome};
