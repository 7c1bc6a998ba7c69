//! High-dimensional neural-network potential.
//!
//! Every element has its own feed-forward network mapping the scaled
//! descriptors of an atom to an atomic energy; the total energy is their
//! sum. Networks are trained on normalized labels and predictions are
//! mapped back to Hartree and Hartree/Bohr.

mod io;
mod model;
mod network;
mod train;

pub use io::{load_model, save_model};
pub use model::{evaluate, init_model, loss_and_gradients, Metrics, MlpArchitecture, MlpModel, DEFAULT_HIDDEN};
pub use network::{Activation, NetworkSpec};
pub use train::{train, EpochRecord, TrainConfig, TrainOutcome};
