use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use super::network::{self, Activation, NetworkSpec, Workspace};
use crate::data::{rmse_energy, rmse_forces, Dataset, Element, NormParams, Structure};
use crate::descriptors::{compute_descriptors, DescriptorSet};
use crate::{Error, Result};

/// Default hidden layers.
pub const DEFAULT_HIDDEN: [usize; 2] = [25, 25];

/// One network per element.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpArchitecture {
    pub networks: BTreeMap<Element, NetworkSpec>,
}

impl MlpArchitecture {
    /// Same hidden layers for every element of `set`, input widths taken
    /// from the set.
    pub fn uniform(set: &DescriptorSet, hidden: &[usize], activation: Activation) -> Result<Self> {
        let networks = set
            .elements()
            .map(|e| {
                let spec = NetworkSpec {
                    input: set.input_width(e)?,
                    hidden: hidden.to_vec(),
                    activation,
                };
                spec.validate()?;
                Ok((e.clone(), spec))
            })
            .collect::<Result<_>>()?;
        Ok(MlpArchitecture { networks })
    }

    pub fn n_params(&self) -> usize {
        self.networks.values().map(NetworkSpec::n_params).sum()
    }

    fn check(&self, set: &DescriptorSet) -> Result<()> {
        if !set.is_scaled() {
            return Err(Error::InvalidParameter("descriptor set has no fitted scaling".into()));
        }
        for (e, spec) in &self.networks {
            spec.validate()?;
            let width = set.input_width(e)?;
            if width != spec.input {
                return Err(Error::LengthMismatch(format!(
                    "element {e}: network input width {} but {width} descriptors",
                    spec.input
                )));
            }
        }
        for e in set.elements() {
            if !self.networks.contains_key(e) {
                return Err(Error::UnknownElement(format!("{e} has descriptors but no network")));
            }
        }
        Ok(())
    }
}

/// A trained or freshly initialized potential.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub arch: MlpArchitecture,
    pub descriptors: DescriptorSet,
    pub norm: NormParams,
    /// All networks in element order, each laid out as in
    /// [`NetworkSpec::n_params`].
    pub params: Vec<f64>,
}

/// Weights drawn from `N(0, 1/fan_in)`, biases zero.
pub fn init_model(
    arch: MlpArchitecture,
    descriptors: DescriptorSet,
    norm: NormParams,
    seed: u64,
) -> Result<MlpModel> {
    arch.check(&descriptors)?;
    norm.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(arch.n_params());
    for spec in arch.networks.values() {
        for (fan_in, fan_out) in spec.layers() {
            let dist = Normal::new(0.0, 1.0 / (fan_in as f64).sqrt()).expect("positive std");
            params.extend((0..fan_in * fan_out).map(|_| dist.sample(&mut rng)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
    }
    Ok(MlpModel { arch, descriptors, norm, params })
}

/// Descriptors and normalized labels of one structure, ready for repeated
/// network evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub atoms: Vec<PreparedAtom>,
    pub n_atoms: usize,
    /// Normalized total energy.
    pub energy: Option<f64>,
    /// Normalized forces.
    pub forces: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone)]
pub(crate) struct PreparedAtom {
    pub net: usize,
    pub values: Vec<f64>,
    pub neighbors: Vec<usize>,
    pub gradients: Vec<[f64; 3]>,
}

/// Energy and force predictions in normalized units.
pub(crate) struct RawPrediction {
    pub energy: f64,
    pub atomic: Vec<f64>,
    pub forces: Vec<[f64; 3]>,
}

/// Per-network scratch for a model.
pub(crate) struct Scratch {
    ws: Vec<Workspace>,
    g: Vec<f64>,
    u: Vec<f64>,
}

impl MlpModel {
    pub(crate) fn specs(&self) -> Vec<&NetworkSpec> {
        self.arch.networks.values().collect()
    }

    /// Start of every network's parameters.
    pub(crate) fn offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.arch
            .networks
            .values()
            .map(|s| {
                let o = off;
                off += s.n_params();
                o
            })
            .collect()
    }

    pub(crate) fn scratch(&self) -> Scratch {
        Scratch {
            ws: vec![Workspace::default(); self.arch.networks.len()],
            g: Vec::new(),
            u: Vec::new(),
        }
    }

    pub(crate) fn prepare(&self, s: &Structure) -> Result<Prepared> {
        let index: BTreeMap<&Element, usize> = self.arch.networks.keys().enumerate().map(|(i, e)| (e, i)).collect();
        for e in &s.species {
            if !index.contains_key(e) {
                return Err(Error::UnknownElement(e.to_string()));
            }
        }
        let out = compute_descriptors(s, &self.descriptors, true)?;
        let atoms = s
            .species
            .iter()
            .zip(out.atoms)
            .map(|(e, a)| PreparedAtom {
                net: index[e],
                values: a.values,
                neighbors: a.neighbors,
                gradients: a.gradients,
            })
            .collect();
        let ff = self.norm.force_factor();
        Ok(Prepared {
            atoms,
            n_atoms: s.n_atoms(),
            energy: s.energy.map(|e| self.norm.energy_forward(e, s.n_atoms())),
            forces: s
                .forces
                .as_ref()
                .map(|f| f.iter().map(|v| [v[0] * ff, v[1] * ff, v[2] * ff]).collect()),
        })
    }

    pub(crate) fn prepare_all(&self, ds: &Dataset) -> Result<Vec<Prepared>> {
        ds.iter().map(|s| self.prepare(s)).collect()
    }

    /// Normalized energy, atomic contributions and normalized forces.
    pub(crate) fn predict_raw(&self, params: &[f64], p: &Prepared, scratch: &mut Scratch, forces: bool) -> RawPrediction {
        let specs = self.specs();
        let offs = self.offsets();
        let mut atomic = Vec::with_capacity(p.n_atoms);
        let mut f = vec![[0.0; 3]; if forces { p.n_atoms } else { 0 }];
        let inv_len = 1.0 / self.norm.c_length;
        for atom in &p.atoms {
            let spec = specs[atom.net];
            let pr = &params[offs[atom.net]..offs[atom.net] + spec.n_params()];
            let ws = &mut scratch.ws[atom.net];
            atomic.push(network::forward(spec, pr, &atom.values, ws));
            if forces {
                scratch.g.resize(spec.input, 0.0);
                network::input_gradient(spec, pr, ws, &mut scratch.g);
                add_forces(atom, &scratch.g, -inv_len, &mut f);
            }
        }
        RawPrediction {
            energy: atomic.iter().sum(),
            atomic,
            forces: f,
        }
    }

    /// Adds the loss gradient of `batch` to `grad` and returns the loss
    /// `mean_s (dE*_s / N_s)^2 + beta * mean_s mean_(3N_s) (dF*)^2`.
    pub(crate) fn loss_prepared(&self, params: &[f64], batch: &[&Prepared], beta: f64, scratch: &mut Scratch, grad: &mut [f64]) -> Result<f64> {
        let specs = self.specs();
        let offs = self.offsets();
        let b = batch.len() as f64;
        let inv_len = 1.0 / self.norm.c_length;
        let mut loss = 0.0;
        for (k, p) in batch.iter().enumerate() {
            let e_ref = p.energy.ok_or_else(|| Error::MissingLabel(format!("batch structure {k} has no energy")))?;
            let use_forces = beta > 0.0;
            let f_ref = match (&p.forces, use_forces) {
                (Some(f), true) => Some(f),
                (None, true) => {
                    return Err(Error::MissingLabel(format!(
                        "batch structure {k} has no forces but the force weight is {beta}"
                    )))
                }
                _ => None,
            };
            let pred = self.predict_raw(params, p, scratch, use_forces);
            let n = p.n_atoms as f64;
            let de = (pred.energy - e_ref) / n;
            loss += de * de / b;
            let ybar = 2.0 * de / (n * b);
            let mut resid = Vec::new();
            if let Some(f_ref) = f_ref {
                let c = 2.0 * beta / (3.0 * n * b);
                for (pf, rf) in pred.forces.iter().zip(f_ref) {
                    let r = [pf[0] - rf[0], pf[1] - rf[1], pf[2] - rf[2]];
                    loss += beta * (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]) / (3.0 * n * b);
                    resid.push([c * r[0], c * r[1], c * r[2]]);
                }
            }
            for atom in &p.atoms {
                let spec = specs[atom.net];
                let range = offs[atom.net]..offs[atom.net] + spec.n_params();
                let u = if use_forces {
                    // dL/dG_j = -(1/c_length) sum_m (dL/dF*_m) . dG_j/dR_m
                    let nb = atom.neighbors.len();
                    scratch.u.clear();
                    scratch.u.extend((0..spec.input).map(|j| {
                        let g = &atom.gradients[j * nb..(j + 1) * nb];
                        -inv_len
                            * atom
                                .neighbors
                                .iter()
                                .zip(g)
                                .map(|(&m, d)| resid[m][0] * d[0] + resid[m][1] * d[1] + resid[m][2] * d[2])
                                .sum::<f64>()
                    }));
                    Some(scratch.u.as_slice())
                } else {
                    None
                };
                network::accumulate_param_gradient(
                    spec,
                    &params[range.clone()],
                    &atom.values,
                    u,
                    ybar,
                    &mut scratch.ws[atom.net],
                    &mut grad[range],
                );
            }
        }
        Ok(loss)
    }

    /// Total energy (Hartree) and per-atom contributions.
    pub fn predict_energy(&self, s: &Structure) -> Result<(f64, Vec<f64>)> {
        let p = self.prepare(s)?;
        let raw = self.predict_raw(&self.params, &p, &mut self.scratch(), false);
        let c = self.norm.c_energy;
        let mean = self.norm.mean_energy_per_atom;
        Ok((
            self.norm.energy_inverse(raw.energy, p.n_atoms),
            raw.atomic.iter().map(|y| y / c + mean).collect(),
        ))
    }

    /// Forces, Hartree/Bohr.
    pub fn predict_forces(&self, s: &Structure) -> Result<Vec<[f64; 3]>> {
        Ok(self.predict(s)?.forces.expect("forces predicted"))
    }

    /// Copy of `s` with predicted energy and forces.
    pub fn predict(&self, s: &Structure) -> Result<Structure> {
        let p = self.prepare(s)?;
        let raw = self.predict_raw(&self.params, &p, &mut self.scratch(), true);
        let ff = 1.0 / self.norm.force_factor();
        let mut out = s.clone();
        out.energy = Some(self.norm.energy_inverse(raw.energy, p.n_atoms));
        out.forces = Some(raw.forces.iter().map(|f| [f[0] * ff, f[1] * ff, f[2] * ff]).collect());
        Ok(out)
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Dataset> {
        ds.iter().map(|s| self.predict(s)).collect()
    }
}

fn add_forces(atom: &PreparedAtom, g: &[f64], factor: f64, f: &mut [[f64; 3]]) {
    let nb = atom.neighbors.len();
    for (j, gj) in g.iter().enumerate() {
        if *gj == 0.0 {
            continue;
        }
        for (m, d) in atom.neighbors.iter().zip(&atom.gradients[j * nb..(j + 1) * nb]) {
            for k in 0..3 {
                f[*m][k] += factor * gj * d[k];
            }
        }
    }
}

/// Loss and its gradient with respect to [`MlpModel::params`] on `batch`.
pub fn loss_and_gradients(model: &MlpModel, batch: &[Structure], beta: f64) -> Result<(f64, Vec<f64>)> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("force weight must be >= 0, got {beta}")));
    }
    if batch.is_empty() {
        return Err(Error::EmptyDataset("loss batch".into()));
    }
    let prepared = batch.iter().map(|s| model.prepare(s)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Prepared> = prepared.iter().collect();
    let mut grad = vec![0.0; model.params.len()];
    let loss = model.loss_prepared(&model.params, &refs, beta, &mut model.scratch(), &mut grad)?;
    Ok((loss, grad))
}

/// Energy RMSE (Hartree/atom) and, when every structure has forces, force
/// RMSE (Hartree/Bohr).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rmse_energy: f64,
    pub rmse_forces: Option<f64>,
}

pub fn evaluate(model: &MlpModel, dataset: &Dataset) -> Result<Metrics> {
    dataset.require_non_empty("evaluation")?;
    let pred = model.predict_dataset(dataset)?;
    Ok(Metrics {
        rmse_energy: rmse_energy(&pred, dataset)?,
        rmse_forces: if dataset.has_forces() {
            Some(rmse_forces(&pred, dataset)?)
        } else {
            None
        },
    })
}
