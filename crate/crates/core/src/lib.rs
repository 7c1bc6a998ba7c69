//! Core building blocks for training neural-network potentials on noisy
//! electronic-structure labels.
//!
//! The crate is organised bottom-up:
//!
//! - [`data`]: structures, datasets, the text file format, label
//!   normalization, synthetic label noise and RMSE metrics.
//! - [`descriptors`]: radial/angular atom-centered symmetry functions with
//!   analytic Cartesian gradients and min/max scaling.
//! - [`selection`]: greedy CUR selection of feature columns and configuration
//!   rows.
//! - [`mlp`]: per-element feed-forward networks summed into a total energy,
//!   analytic forces, Adam training and evaluation.
//!
//! All quantities are stored in atomic units (Hartree, Bohr). [`units`]
//! converts from and to eV/Å at the I/O boundary.

pub mod data;
pub mod descriptors;
pub mod error;
pub mod mlp;
pub mod rng;
pub mod selection;
pub mod units;

pub use data::{Dataset, Element, NormParams, NoiseInjection, Structure};
pub use error::{Error, Result};
