//! Experiment drivers: label-noise and dataset-size sweeps, quantum-label
//! studies and CSV reporting on top of `qnnp-core` and `qnnp-quantum`.

pub mod config;
pub mod datasets;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod studies;
pub mod sweep;

pub use error::{Error, Result};
