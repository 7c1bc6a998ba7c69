//! Atom-centered symmetry functions.
//!
//! Radial (G2) and angular (G3) functions describe the environment of each
//! atom inside a smooth `tanh^3` cutoff sphere. Values are invariant under
//! translation, rotation and permutation of same-element neighbors;
//! [`compute_descriptors`] also returns their analytic Cartesian gradients,
//! which the potential uses for forces.

mod cutoff;
mod evaluate;
mod functions;
mod params;
mod set;

pub use cutoff::{cutoff, cutoff_derivative, CutoffSpec};
pub use evaluate::{compute_descriptors, eval_g2, eval_g3, AtomDescriptors, Contribution, DescriptorOutput};
pub use functions::{AngularSF, RadialSF, SymmetryFunction};
pub use params::{generate_angular_params, generate_radial_params, radial_widths, DEFAULT_ZETAS};
pub use set::{fit_scaling, parse_descriptor_set, DescriptorSet, ElementFunctions, ScaleStats};

/// Default cutoff radius for molecular systems, Bohr.
pub const DEFAULT_CUTOFF: f64 = 12.0;
