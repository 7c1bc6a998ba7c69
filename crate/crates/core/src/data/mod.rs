//! Structures, datasets and label processing.

mod io;
mod metrics;
mod noise;
mod normalization;
mod structure;

pub use io::{parse_structures, parse_structures_str, write_structures, write_structures_string};
pub use metrics::{rmse_energy, rmse_forces};
pub use noise::{inject_noise, NoiseInjection};
pub use normalization::{apply_normalization, compute_normalization, Direction, NormParams};
pub use structure::{Dataset, Element, Structure, UNITS_TAG};
