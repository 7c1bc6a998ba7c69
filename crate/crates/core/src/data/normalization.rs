//! Label normalization into internal units.
//!
//! With per-atom energies `e_i = E_i / N_i`, mean `<e>` and population
//! standard deviation `sigma_e`, and the population standard deviation
//! `sigma_F` of all force components:
//!
//! ```text
//! c_energy = 1 / sigma_e        c_length = sigma_F / sigma_e  (1 without forces)
//! E* = c_energy (E - N <e>)     R* = c_length R     F* = (c_energy / c_length) F
//! ```
//!
//! so that `E*/N` has zero mean and unit standard deviation and `F*` has unit
//! standard deviation.

use super::structure::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormParams {
    /// Mean energy per atom, Hartree/atom.
    pub mean_energy_per_atom: f64,
    /// 1 / sigma_e, 1/Hartree.
    pub c_energy: f64,
    /// sigma_F / sigma_e, 1/Bohr.
    pub c_length: f64,
}

impl NormParams {
    /// Parameters that leave every label unchanged.
    pub fn identity() -> Self {
        NormParams {
            mean_energy_per_atom: 0.0,
            c_energy: 1.0,
            c_length: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mean_energy_per_atom.is_finite()
            && self.c_energy.is_finite()
            && self.c_energy > 0.0
            && self.c_length.is_finite()
            && self.c_length > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "normalization parameters must be finite with positive factors: {self:?}"
            )))
        }
    }

    /// Normalized total energy of a structure with `n_atoms` atoms.
    pub fn energy_forward(&self, energy: f64, n_atoms: usize) -> f64 {
        self.c_energy * (energy - n_atoms as f64 * self.mean_energy_per_atom)
    }

    pub fn energy_inverse(&self, energy: f64, n_atoms: usize) -> f64 {
        energy / self.c_energy + n_atoms as f64 * self.mean_energy_per_atom
    }

    /// Factor taking physical forces to normalized forces.
    pub fn force_factor(&self) -> f64 {
        self.c_energy / self.c_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

fn mean_and_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fit normalization parameters to the labels of `dataset`.
///
/// Forces are used only when every structure carries them; otherwise
/// `c_length` is 1.
pub fn compute_normalization(dataset: &Dataset) -> Result<NormParams> {
    dataset.require_non_empty("normalization")?;
    let per_atom: Vec<f64> = dataset
        .iter()
        .enumerate()
        .map(|(i, s)| s.require_energy(i).map(|e| e / s.n_atoms() as f64))
        .collect::<Result<_>>()?;
    let (mean, sigma_e) = mean_and_std(per_atom.iter().copied());
    let scale = mean.abs().max(1.0);
    if !(sigma_e > 1e-14 * scale) {
        return Err(Error::DegenerateStatistics(format!(
            "per-atom energy standard deviation {sigma_e:e} over {} structures",
            dataset.len()
        )));
    }
    let c_length = if dataset.has_forces() {
        let comps = dataset
            .iter()
            .flat_map(|s| s.forces.as_deref().unwrap_or(&[]).iter().flatten().copied());
        let (_, sigma_f) = mean_and_std(comps);
        if sigma_f > 0.0 {
            sigma_f / sigma_e
        } else {
            1.0
        }
    } else {
        1.0
    };
    Ok(NormParams {
        mean_energy_per_atom: mean,
        c_energy: 1.0 / sigma_e,
        c_length,
    })
}

/// Transform labels and positions into (forward) or out of (inverse)
/// normalized units.
pub fn apply_normalization(
    dataset: &Dataset,
    params: &NormParams,
    direction: Direction,
) -> Result<Dataset> {
    params.validate()?;
    let (length, force) = match direction {
        Direction::Forward => (params.c_length, params.force_factor()),
        Direction::Inverse => (1.0 / params.c_length, 1.0 / params.force_factor()),
    };
    let mut out = dataset.clone();
    for s in &mut out.structures {
        let n = s.n_atoms();
        for p in s.positions.iter_mut().flatten() {
            *p *= length;
        }
        if let Some(e) = s.energy.as_mut() {
            *e = match direction {
                Direction::Forward => params.energy_forward(*e, n),
                Direction::Inverse => params.energy_inverse(*e, n),
            };
        }
        if let Some(f) = s.forces.as_mut() {
            for c in f.iter_mut().flatten() {
                *c *= force;
            }
        }
    }
    Ok(out)
}
