use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::units::UnitSystem;
use crate::{Error, Result};

/// Unit convention of everything stored in a [`Dataset`].
pub const UNITS_TAG: &str = "hartree-bohr";

/// Chemical element symbol, e.g. `H` or `Cl`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element(String);

impl Element {
    pub fn new(symbol: &str) -> Result<Self> {
        symbol.parse()
    }

    pub fn symbol(&self) -> &str {
        &self.0
    }
}

impl FromStr for Element {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        let valid = match chars.next() {
            Some(first) => {
                first.is_ascii_uppercase()
                    && s.len() <= 3
                    && chars.all(|c| c.is_ascii_lowercase())
            }
            None => false,
        };
        if valid {
            Ok(Element(s.to_string()))
        } else {
            Err(Error::InvalidParameter(format!("bad element symbol {s:?}")))
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An atomic configuration with optional energy and force labels.
///
/// Positions are in Bohr, the energy is the total energy in Hartree and
/// forces are in Hartree/Bohr.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    pub species: Vec<Element>,
    pub positions: Vec<[f64; 3]>,
    pub energy: Option<f64>,
    pub forces: Option<Vec<[f64; 3]>>,
    pub comment: String,
}

impl Structure {
    /// Build an unlabeled structure, checking the invariants.
    pub fn new(species: Vec<Element>, positions: Vec<[f64; 3]>) -> Result<Self> {
        let s = Structure {
            species,
            positions,
            energy: None,
            forces: None,
            comment: String::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_energy(mut self, energy: f64) -> Self {
        self.energy = Some(energy);
        self
    }

    pub fn with_forces(mut self, forces: Vec<[f64; 3]>) -> Self {
        self.forces = Some(forces);
        self
    }

    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comment = comment.into();
        self
    }

    pub fn n_atoms(&self) -> usize {
        self.species.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.len() != self.species.len() {
            return Err(Error::InvalidStructure(format!(
                "{} species but {} positions",
                self.species.len(),
                self.positions.len()
            )));
        }
        if let Some(forces) = &self.forces {
            if forces.len() != self.species.len() {
                return Err(Error::InvalidStructure(format!(
                    "{} atoms but {} force vectors",
                    self.species.len(),
                    forces.len()
                )));
            }
            if forces.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::InvalidStructure("non-finite force".into()));
            }
        }
        if self.positions.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidStructure("non-finite coordinate".into()));
        }
        if let Some(e) = self.energy {
            if !e.is_finite() {
                return Err(Error::InvalidStructure("non-finite energy".into()));
            }
        }
        Ok(())
    }

    /// Energy per atom, if labeled.
    pub fn energy_per_atom(&self) -> Option<f64> {
        self.energy.map(|e| e / self.n_atoms() as f64)
    }

    /// Energy, or a missing-label error naming structure `index`.
    pub fn require_energy(&self, index: usize) -> Result<f64> {
        self.energy
            .ok_or_else(|| Error::MissingLabel(format!("structure {index} has no energy")))
    }

    pub fn require_forces(&self, index: usize) -> Result<&[[f64; 3]]> {
        self.forces
            .as_deref()
            .ok_or_else(|| Error::MissingLabel(format!("structure {index} has no forces")))
    }
}

/// Ordered collection of structures stored in atomic units.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub structures: Vec<Structure>,
}

impl Dataset {
    pub fn new(structures: Vec<Structure>) -> Self {
        Dataset { structures }
    }

    pub fn units(&self) -> &'static str {
        UNITS_TAG
    }

    pub fn len(&self) -> usize {
        self.structures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structures.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Structure> {
        self.structures.iter()
    }

    /// Sorted set of all elements occurring in the dataset.
    pub fn elements(&self) -> BTreeSet<Element> {
        self.structures
            .iter()
            .flat_map(|s| s.species.iter().cloned())
            .collect()
    }

    pub fn has_forces(&self) -> bool {
        !self.is_empty() && self.structures.iter().all(|s| s.forces.is_some())
    }

    pub fn has_energies(&self) -> bool {
        !self.is_empty() && self.structures.iter().all(|s| s.energy.is_some())
    }

    /// Error unless the dataset holds at least one structure.
    pub fn require_non_empty(&self, what: &str) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyDataset(what.to_string()))
        } else {
            Ok(())
        }
    }

    /// Structures at `indices`, in the requested order.
    pub fn subsample(&self, indices: &[usize]) -> Result<Dataset> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.len(),
                });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParameter(format!("duplicate index {i}")));
            }
            out.push(self.structures[i].clone());
        }
        Ok(Dataset::new(out))
    }

    /// Dataset with all labels removed.
    pub fn without_labels(&self) -> Dataset {
        Dataset::new(
            self.structures
                .iter()
                .map(|s| Structure {
                    energy: None,
                    forces: None,
                    ..s.clone()
                })
                .collect(),
        )
    }

    /// Convert a dataset read in `from` units into the internal atomic units.
    pub fn into_atomic(mut self, from: UnitSystem) -> Dataset {
        let (e, l, f) = (
            from.energy_to_hartree(),
            from.length_to_bohr(),
            from.force_to_atomic(),
        );
        for s in &mut self.structures {
            scale_structure(s, e, l, f);
        }
        self
    }

    /// Convert an atomic-unit dataset into `to` units (for writing).
    pub fn from_atomic(mut self, to: UnitSystem) -> Dataset {
        let (e, l, f) = (
            1.0 / to.energy_to_hartree(),
            1.0 / to.length_to_bohr(),
            1.0 / to.force_to_atomic(),
        );
        for s in &mut self.structures {
            scale_structure(s, e, l, f);
        }
        self
    }
}

fn scale_structure(s: &mut Structure, e: f64, l: f64, f: f64) {
    for p in s.positions.iter_mut().flatten() {
        *p *= l;
    }
    if let Some(energy) = s.energy.as_mut() {
        *energy *= e;
    }
    if let Some(forces) = s.forces.as_mut() {
        for c in forces.iter_mut().flatten() {
            *c *= f;
        }
    }
}

impl FromIterator<Structure> for Dataset {
    fn from_iter<I: IntoIterator<Item = Structure>>(iter: I) -> Self {
        Dataset::new(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Structure;
    type IntoIter = std::slice::Iter<'a, Structure>;

    fn into_iter(self) -> Self::IntoIter {
        self.structures.iter()
    }
}
