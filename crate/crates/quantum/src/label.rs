use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::circuit::{build_ansatz, AnsatzKind};
use crate::pauli::{parse_hamiltonian, PauliHamiltonian};
use crate::vqe::{vqe, Backend, OptimizerConfig};
use crate::{Error, Result};
use qnnp_core::rng::derive_seed;
use qnnp_core::{Dataset, Structure};

/// Supplies the qubit Hamiltonian of a structure.
pub trait HamiltonianSource: Sync {
    fn hamiltonian(&self, index: usize, structure: &Structure) -> Result<PauliHamiltonian>;
}

/// `<dir>/<index>.ham` for structure `index`.
#[derive(Debug, Clone)]
pub struct IndexedDir {
    pub dir: PathBuf,
}

impl IndexedDir {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        IndexedDir { dir: dir.into() }
    }
}

impl HamiltonianSource for IndexedDir {
    fn hamiltonian(&self, index: usize, _: &Structure) -> Result<PauliHamiltonian> {
        let path = self.dir.join(format!("{index}.ham"));
        if !path.is_file() {
            return Err(Error::MissingHamiltonian {
                index,
                message: format!("{} does not exist", path.display()),
            });
        }
        parse_hamiltonian(path)
    }
}

/// Diatomic Hamiltonians keyed by bond length: files named `<r>.ham` with
/// `r` in Bohr, matched within `tolerance`.
#[derive(Debug, Clone)]
pub struct BondLengthLibrary {
    files: BTreeMap<u64, (f64, PathBuf)>,
    pub tolerance: f64,
}

impl BondLengthLibrary {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = BTreeMap::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.extension().is_some_and(|e| e == "ham") {
                if let Some(r) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<f64>().ok()) {
                    files.insert(r.to_bits(), (r, path));
                }
            }
        }
        if files.is_empty() {
            return Err(Error::InvalidParameter(format!("no <r>.ham files in {}", dir.display())));
        }
        Ok(BondLengthLibrary { files, tolerance: 1e-6 })
    }

    /// Available bond lengths in ascending order.
    pub fn bond_lengths(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.files.values().map(|(r, _)| *r).collect();
        r.sort_by(f64::total_cmp);
        r
    }

    pub fn get(&self, r: f64) -> Option<&Path> {
        self.files
            .values()
            .filter(|(x, _)| (x - r).abs() <= self.tolerance)
            .min_by(|a, b| (a.0 - r).abs().total_cmp(&(b.0 - r).abs()))
            .map(|(_, p)| p.as_path())
    }
}

impl HamiltonianSource for BondLengthLibrary {
    fn hamiltonian(&self, index: usize, s: &Structure) -> Result<PauliHamiltonian> {
        if s.n_atoms() != 2 {
            return Err(Error::MissingHamiltonian {
                index,
                message: format!("bond-length lookup needs 2 atoms, got {}", s.n_atoms()),
            });
        }
        let (a, b) = (s.positions[0], s.positions[1]);
        let r = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        match self.get(r) {
            Some(p) => parse_hamiltonian(p),
            None => Err(Error::MissingHamiltonian {
                index,
                message: format!("no Hamiltonian within {} Bohr of r = {r}", self.tolerance),
            }),
        }
    }
}

/// VQE labeling settings. Repeat `r` of structure `i` uses optimizer seed
/// `derive_seed(seed, [i, r, 0])` and sampling seed
/// `derive_seed(seed, [i, r, 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub ansatz: AnsatzKind,
    pub depth: usize,
    pub backend: Backend,
    pub optimizer: OptimizerConfig,
    pub repeats: usize,
    /// Runs more than this many median absolute deviations above the
    /// median are dropped before averaging.
    pub outlier_mads: Option<f64>,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            ansatz: AnsatzKind::H2Minimal,
            depth: 1,
            backend: Backend::Exact,
            optimizer: OptimizerConfig::default(),
            repeats: 1,
            outlier_mads: Some(3.0),
            seed: 0,
        }
    }
}

/// Outcome of every VQE run on one structure.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDetail {
    pub energies: Vec<f64>,
    pub converged: Vec<bool>,
    /// Runs entering the average.
    pub kept: Vec<bool>,
    pub label: f64,
}

#[derive(Debug, Clone)]
pub struct LabelReport {
    pub dataset: Dataset,
    pub details: Vec<LabelDetail>,
}

/// Sets each structure's energy (Hartree) to the filtered mean of
/// `repeats` VQE runs. Forces are cleared.
pub fn label_dataset(dataset: &Dataset, source: &dyn HamiltonianSource, config: &EngineConfig) -> Result<LabelReport> {
    if config.repeats == 0 {
        return Err(Error::InvalidParameter("need at least one VQE repeat".into()));
    }
    let details = dataset
        .structures
        .par_iter()
        .enumerate()
        .map(|(i, s)| label_one(i, s, source, config))
        .collect::<Result<Vec<_>>>()?;
    let mut out = dataset.clone();
    for (s, d) in out.structures.iter_mut().zip(&details) {
        s.energy = Some(d.label);
        s.forces = None;
    }
    Ok(LabelReport { dataset: out, details })
}

fn label_one(index: usize, s: &Structure, source: &dyn HamiltonianSource, config: &EngineConfig) -> Result<LabelDetail> {
    let h = source.hamiltonian(index, s)?;
    let circuit = build_ansatz(config.ansatz, h.n_qubits, config.depth)?;
    let mut energies = Vec::with_capacity(config.repeats);
    let mut converged = Vec::with_capacity(config.repeats);
    for r in 0..config.repeats as u64 {
        let i = index as u64;
        let opt = OptimizerConfig {
            seed: derive_seed(config.seed, &[i, r, 0]),
            ..config.optimizer.clone()
        };
        let backend = config.backend.reseeded(derive_seed(config.seed, &[i, r, 1]));
        let res = vqe(&h, &circuit, &opt, &backend)?;
        energies.push(res.energy);
        converged.push(res.converged);
    }
    let kept = filter_runs(&energies, &converged, config.outlier_mads);
    if !converged.iter().any(|&c| c) {
        log::warn!("structure {index}: no VQE run converged, averaging all runs");
    }
    let n = kept.iter().filter(|&&k| k).count();
    let label = energies.iter().zip(&kept).filter(|(_, &k)| k).map(|(e, _)| e).sum::<f64>() / n as f64;
    Ok(LabelDetail {
        energies,
        converged,
        kept,
        label,
    })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Converged runs (all runs if none converged), minus high outliers.
fn filter_runs(energies: &[f64], converged: &[bool], mads: Option<f64>) -> Vec<bool> {
    let any = converged.iter().any(|&c| c);
    let mut kept: Vec<bool> = converged.iter().map(|&c| c || !any).collect();
    let Some(k) = mads else { return kept };
    let mut pool: Vec<f64> = energies.iter().zip(&kept).filter(|(_, &k)| k).map(|(e, _)| *e).collect();
    if pool.len() < 3 {
        return kept;
    }
    let m = median(&mut pool);
    let mut dev: Vec<f64> = pool.iter().map(|e| (e - m).abs()).collect();
    let mad = median(&mut dev);
    for (keep, e) in kept.iter_mut().zip(energies) {
        if *keep && e - m > k * mad {
            *keep = false;
        }
    }
    kept
}
