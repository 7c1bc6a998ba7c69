use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use qnnp_core::data::parse_structures;
use qnnp_core::descriptors::{fit_scaling, DescriptorSet};
use qnnp_core::rng::stream;
use qnnp_core::selection::{select_rows, structure_feature_matrix};
use qnnp_core::{Dataset, Element, Structure};
use qnnp_quantum::label::HamiltonianSource;
use qnnp_quantum::{exact_ground_state, BondLengthLibrary};

use crate::config::KeyValues;
use crate::pipeline::ModelSettings;
use crate::{Error, Result};

/// Spacing of the bundled H2 Hamiltonian grid, Bohr.
pub const H2_GRID_STEP: f64 = 0.01;

/// Location of the bundled H2 Hamiltonians.
pub fn default_h2_library() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/h2_sto3g")
}

/// Training/validation pair.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub validation: Dataset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct H2Source {
    pub hamiltonians: PathBuf,
    pub r_min: f64,
    pub r_max: f64,
    pub forces: bool,
}

impl Default for H2Source {
    fn default() -> Self {
        H2Source {
            hamiltonians: default_h2_library(),
            r_min: 0.6,
            r_max: 4.2,
            forces: false,
        }
    }
}

/// Pairwise Morse clusters built from two H2-like dimers.
#[derive(Debug, Clone, PartialEq)]
pub struct MorseSource {
    pub n_molecules: usize,
    pub depth: f64,
    pub width: f64,
    pub r0: f64,
}

impl Default for MorseSource {
    fn default() -> Self {
        MorseSource {
            n_molecules: 2,
            depth: 0.17,
            width: 1.03,
            r0: 1.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Files { train: PathBuf, validation: PathBuf },
    H2(H2Source),
    Morse(MorseSource),
}

/// How training and validation sets are drawn from a generated source.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampling {
    pub n_train: usize,
    pub n_validation: usize,
    /// Random pool for CUR row selection; `None` (or 0 in a config file)
    /// samples training structures directly.
    pub pool: Option<usize>,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            n_train: 20,
            n_validation: 50,
            pool: Some(1000),
        }
    }
}

impl DataSource {
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let kind = kv.get_or("data", "h2".to_string())?;
        match kind.as_str() {
            "files" => Ok(DataSource::Files {
                train: kv.require("data.train")?,
                validation: kv.require("data.validation")?,
            }),
            "h2" => {
                let d = H2Source::default();
                Ok(DataSource::H2(H2Source {
                    hamiltonians: kv.get_or("data.hamiltonians", d.hamiltonians)?,
                    r_min: kv.get_or("data.r_min", d.r_min)?,
                    r_max: kv.get_or("data.r_max", d.r_max)?,
                    forces: kv.get_or("data.forces", d.forces)?,
                }))
            }
            "morse" => {
                let d = MorseSource::default();
                Ok(DataSource::Morse(MorseSource {
                    n_molecules: kv.get_or("data.n_molecules", d.n_molecules)?,
                    depth: kv.get_or("data.morse_depth", d.depth)?,
                    width: kv.get_or("data.morse_width", d.width)?,
                    r0: kv.get_or("data.morse_r0", d.r0)?,
                }))
            }
            other => Err(Error::InvalidConfig(format!("unknown data source {other:?}"))),
        }
    }
}

impl Sampling {
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let d = Sampling::default();
        let s = Sampling {
            n_train: kv.get_or("data.n_train", d.n_train)?,
            n_validation: kv.get_or("data.n_validation", d.n_validation)?,
            pool: match kv.get::<usize>("data.pool")? {
                Some(0) => None,
                Some(n) => Some(n),
                None => d.pool,
            },
        };
        if s.n_train == 0 || s.n_validation == 0 {
            return Err(Error::InvalidConfig("data.n_train and data.n_validation must be positive".into()));
        }
        Ok(s)
    }
}

fn random_direction(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-6 {
            return v.map(|x| x / n);
        }
    }
}

/// Dimer at bond length `r` with a random orientation and center.
pub fn dimer(r: f64, rng: &mut impl Rng) -> Structure {
    let u = random_direction(rng);
    let c: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
    let h = Element::new("H").expect("valid symbol");
    Structure::new(
        vec![h.clone(), h],
        vec![
            std::array::from_fn(|k| c[k] - 0.5 * r * u[k]),
            std::array::from_fn(|k| c[k] + 0.5 * r * u[k]),
        ],
    )
    .expect("two finite positions")
}

/// Distance between the two atoms of a dimer.
pub fn bond_length(s: &Structure) -> f64 {
    let (a, b) = (s.positions[0], s.positions[1]);
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl H2Source {
    pub fn library(&self) -> Result<BondLengthLibrary> {
        Ok(BondLengthLibrary::open(&self.hamiltonians)?)
    }

    /// Grid bond lengths inside `[r_min, r_max]`.
    pub fn grid(&self, lib: &BondLengthLibrary) -> Result<Vec<f64>> {
        let r: Vec<f64> = lib
            .bond_lengths()
            .into_iter()
            .filter(|&r| r >= self.r_min - 1e-9 && r <= self.r_max + 1e-9)
            .collect();
        if r.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "no Hamiltonians with bond length in [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        Ok(r)
    }

    /// `n` unlabeled dimers with bond lengths drawn uniformly from the grid.
    pub fn sample(&self, lib: &BondLengthLibrary, n: usize, rng: &mut impl Rng) -> Result<Dataset> {
        let grid = self.grid(lib)?;
        Ok(Dataset::new(
            (0..n).map(|_| dimer(grid[rng.random_range(0..grid.len())], rng)).collect(),
        ))
    }

    /// Exact ground-state energies; forces from central differences of
    /// the neighboring grid Hamiltonians when requested.
    pub fn label_exact(&self, lib: &BondLengthLibrary, ds: &Dataset) -> Result<Dataset> {
        let energy_at = |r: f64| -> Result<f64> {
            let probe = dimer_along_z(r);
            let h = lib.hamiltonian(0, &probe)?;
            Ok(exact_ground_state(&h)?.0)
        };
        let mut out = ds.clone();
        for s in &mut out.structures {
            let r = bond_length(s);
            s.energy = Some(energy_at(r)?);
            s.forces = if self.forces {
                let slope = (energy_at(r + H2_GRID_STEP)? - energy_at(r - H2_GRID_STEP)?) / (2.0 * H2_GRID_STEP);
                let (a, b) = (s.positions[0], s.positions[1]);
                let f0: [f64; 3] = std::array::from_fn(|k| -slope * (a[k] - b[k]) / r);
                Some(vec![f0, f0.map(|x| -x)])
            } else {
                None
            };
        }
        Ok(out)
    }
}

fn dimer_along_z(r: f64) -> Structure {
    let h = Element::new("H").expect("valid symbol");
    Structure::new(vec![h.clone(), h], vec![[0.0; 3], [0.0, 0.0, r]]).expect("finite")
}

impl MorseSource {
    fn pair(&self, r: f64) -> (f64, f64) {
        let e = (-self.width * (r - self.r0)).exp();
        let v = self.depth * ((1.0 - e).powi(2) - 1.0);
        let dv = 2.0 * self.depth * self.width * e * (1.0 - e);
        (v, dv)
    }

    /// Energy and forces of all atom pairs.
    pub fn label(&self, s: &Structure) -> Structure {
        let n = s.n_atoms();
        let mut energy = 0.0;
        let mut forces = vec![[0.0; 3]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d: [f64; 3] = std::array::from_fn(|k| s.positions[i][k] - s.positions[j][k]);
                let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                let (v, dv) = self.pair(r);
                energy += v;
                for k in 0..3 {
                    forces[i][k] -= dv * d[k] / r;
                    forces[j][k] += dv * d[k] / r;
                }
            }
        }
        s.clone().with_energy(energy).with_forces(forces)
    }

    /// Randomly placed and oriented dimers with bond lengths around `r0`.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Dataset {
        let structures = (0..n)
            .map(|_| {
                let mut species = Vec::new();
                let mut positions = Vec::new();
                let mut centers: Vec<[f64; 3]> = Vec::new();
                while centers.len() < self.n_molecules {
                    let c: [f64; 3] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
                    let clear = centers.iter().all(|o| {
                        let d2: f64 = (0..3).map(|k| (o[k] - c[k]).powi(2)).sum();
                        d2 > 3.0f64.powi(2)
                    });
                    if clear {
                        centers.push(c);
                    }
                }
                for c in centers {
                    let r = self.r0 + rng.random_range(-0.3..0.3);
                    let mut m = dimer(r, rng);
                    for p in &mut m.positions {
                        for k in 0..3 {
                            p[k] += c[k];
                        }
                    }
                    species.extend(m.species);
                    positions.extend(m.positions);
                }
                self.label(&Structure::new(species, positions).expect("finite"))
            })
            .collect();
        Dataset::new(structures)
    }
}

/// Picks `n` structures of `pool` by CUR row selection on scaled
/// structure features. If the features run out of rank first, the rest is
/// filled by a seeded shuffle of the remaining structures.
pub fn cur_subset(pool: &Dataset, n: usize, settings: &ModelSettings, seed: u64) -> Result<Vec<usize>> {
    if n > pool.len() {
        return Err(Error::InvalidConfig(format!(
            "subset of {n} requested from a pool of {}",
            pool.len()
        )));
    }
    let elements: Vec<Element> = pool.elements().into_iter().collect();
    let candidates = DescriptorSet::candidate_pool(
        &elements,
        settings.n_radial,
        settings.n_eta,
        &settings.zetas,
        settings.cutoff,
    )?;
    let scaled = fit_scaling(pool, &candidates)?;
    let x = structure_feature_matrix(pool, &scaled)?;
    let k = settings.cur_k.min(x.nrows()).min(x.ncols()).max(1);
    let picked = select_rows(&x, n, k)?;
    let mut out = picked.indices;
    if out.len() < n {
        log::warn!(
            "CUR exhausted after {} of {n} structures; filling the rest at random",
            out.len()
        );
        let mut rest: Vec<usize> = (0..pool.len()).filter(|i| !out.contains(i)).collect();
        rest.shuffle(&mut stream(seed, &[0xC0]));
        out.extend(rest.into_iter().take(n - out.len()));
    }
    Ok(out)
}

/// Training and validation sets. Generated sources draw validation from an
/// independent stream; training comes from `sampling.pool` via CUR when set.
pub fn load(source: &DataSource, sampling: &Sampling, settings: &ModelSettings, seed: u64) -> Result<Splits> {
    let (pool, validation) = match source {
        DataSource::Files { train, validation } => {
            return Ok(Splits {
                train: read(train)?,
                validation: read(validation)?,
            })
        }
        DataSource::H2(h2) => {
            let lib = h2.library()?;
            let n_pool = sampling.pool.unwrap_or(sampling.n_train);
            let pool = h2.label_exact(&lib, &h2.sample(&lib, n_pool, &mut stream(seed, &[1]))?)?;
            let val = h2.label_exact(&lib, &h2.sample(&lib, sampling.n_validation, &mut stream(seed, &[2]))?)?;
            (pool, val)
        }
        DataSource::Morse(m) => {
            let n_pool = sampling.pool.unwrap_or(sampling.n_train);
            (m.sample(n_pool, &mut stream(seed, &[1])), m.sample(sampling.n_validation, &mut stream(seed, &[2])))
        }
    };
    let train = if sampling.pool.is_some() {
        pool.subsample(&cur_subset(&pool, sampling.n_train, settings, seed)?)?
    } else {
        pool
    };
    Ok(Splits { train, validation })
}

fn read(path: &Path) -> Result<Dataset> {
    let ds = parse_structures(path)?;
    ds.require_non_empty(&path.display().to_string())?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qnnp_core::rng::rng;

    #[test]
    fn morse_forces_are_gradients() {
        let m = MorseSource::default();
        let ds = m.sample(3, &mut rng(1));
        for s in &ds.structures {
            let f = s.forces.as_ref().unwrap();
            let mut sum = [0.0; 3];
            for (i, fi) in f.iter().enumerate() {
                for k in 0..3 {
                    sum[k] += fi[k];
                    let mut p = s.clone();
                    p.positions[i][k] += 1e-5;
                    let ep = m.label(&p).energy.unwrap();
                    p.positions[i][k] -= 2e-5;
                    let em = m.label(&p).energy.unwrap();
                    assert!((fi[k] + (ep - em) / 2e-5).abs() < 1e-7);
                }
            }
            assert!(sum.iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn h2_labels() {
        let src = H2Source {
            forces: true,
            ..Default::default()
        };
        let lib = src.library().unwrap();
        let ds = src.label_exact(&lib, &Dataset::new(vec![dimer(1.4, &mut rng(3))])).unwrap();
        let s = &ds.structures[0];
        assert!((s.energy.unwrap() + 1.137275936).abs() < 1e-8);
        // the minimum sits near 1.4 Bohr
        let f = s.forces.as_ref().unwrap();
        assert!(f[0].iter().map(|x| x.abs()).fold(0.0, f64::max) < 5e-3);
        assert!((bond_length(s) - 1.4).abs() < 1e-12);
    }
}
