//! Synthetic Gaussian label noise.

use rand_distr::{Distribution, Normal};

use super::structure::Dataset;
use crate::{rng, Error, Result};

/// Standard deviations of the Gaussian noise added to labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseInjection {
    /// Energy noise per atom, Hartree/atom. A structure with `N` atoms
    /// receives noise with standard deviation `N * delta_e` on its total
    /// energy.
    pub delta_e: f64,
    /// Noise on every force component, Hartree/Bohr.
    pub delta_f: f64,
    pub seed: u64,
}

impl NoiseInjection {
    pub fn none() -> Self {
        NoiseInjection {
            delta_e: 0.0,
            delta_f: 0.0,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.delta_e >= 0.0 && self.delta_f >= 0.0 && self.delta_e.is_finite() && self.delta_f.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "noise standard deviations must be finite and non-negative: {self:?}"
            )))
        }
    }
}

/// Perturb energies and forces with Gaussian noise.
///
/// Zero standard deviations leave the corresponding labels untouched, bit
/// for bit.
pub fn inject_noise(dataset: &Dataset, spec: &NoiseInjection) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = rng::rng(spec.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = dataset.clone();
    for (i, s) in out.structures.iter_mut().enumerate() {
        let n = s.n_atoms() as f64;
        if spec.delta_e > 0.0 {
            let e = s
                .energy
                .as_mut()
                .ok_or_else(|| Error::MissingLabel(format!("structure {i} has no energy")))?;
            *e += spec.delta_e * n * unit.sample(&mut rng);
        }
        if spec.delta_f > 0.0 {
            let f = s
                .forces
                .as_mut()
                .ok_or_else(|| Error::MissingLabel(format!("structure {i} has no forces")))?;
            for c in f.iter_mut().flatten() {
                *c += spec.delta_f * unit.sample(&mut rng);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Element, Structure};
    use crate::units::mev_to_hartree;

    fn atoms(n_structures: usize, with_forces: bool) -> Dataset {
        (0..n_structures)
            .map(|i| {
                let s = Structure::new(vec![Element::new("H").unwrap()], vec![[0.0; 3]])
                    .unwrap()
                    .with_energy(-0.5 + 1e-3 * i as f64);
                if with_forces {
                    s.with_forces(vec![[0.1, -0.2, 0.3]])
                } else {
                    s
                }
            })
            .collect()
    }

    #[test]
    fn zero_noise_is_identity() {
        let ds = atoms(10, true);
        let out = inject_noise(&ds, &NoiseInjection { seed: 9, ..NoiseInjection::none() }).unwrap();
        assert_eq!(out, ds);
        // labels untouched even where absent
        let unlabeled = ds.without_labels();
        assert_eq!(inject_noise(&unlabeled, &NoiseInjection::none()).unwrap(), unlabeled);
    }

    #[test]
    fn energy_noise_standard_deviation() {
        let ds = atoms(10_000, false);
        let delta = mev_to_hartree(10.0);
        let noisy = inject_noise(&ds, &NoiseInjection { delta_e: delta, delta_f: 0.0, seed: 1 }).unwrap();
        let d: Vec<f64> = noisy
            .iter()
            .zip(&ds)
            .map(|(a, b)| a.energy.unwrap() - b.energy.unwrap())
            .collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64).sqrt();
        assert!((sd / delta - 1.0).abs() < 0.03, "sd ratio {}", sd / delta);
    }

    #[test]
    fn energy_noise_scales_with_atom_count() {
        let h = Element::new("H").unwrap();
        let ds: Dataset = (0..4000)
            .map(|_| {
                Structure::new(vec![h.clone(); 4], vec![[0.0; 3]; 4])
                    .unwrap()
                    .with_energy(0.0)
            })
            .collect();
        let noisy = inject_noise(&ds, &NoiseInjection { delta_e: 1.0, delta_f: 0.0, seed: 2 }).unwrap();
        let var = noisy.iter().map(|s| s.energy.unwrap().powi(2)).sum::<f64>() / 4000.0;
        assert!((var.sqrt() / 4.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn deterministic_under_seed() {
        let ds = atoms(100, true);
        let spec = NoiseInjection { delta_e: 0.01, delta_f: 0.02, seed: 42 };
        assert_eq!(inject_noise(&ds, &spec).unwrap(), inject_noise(&ds, &spec).unwrap());
        let other = NoiseInjection { seed: 43, ..spec };
        assert_ne!(inject_noise(&ds, &spec).unwrap(), inject_noise(&ds, &other).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        let ds = atoms(3, false);
        assert!(inject_noise(&ds, &NoiseInjection { delta_e: -1.0, delta_f: 0.0, seed: 0 }).is_err());
        assert!(matches!(
            inject_noise(&ds, &NoiseInjection { delta_e: 0.0, delta_f: 0.1, seed: 0 }),
            Err(Error::MissingLabel(_))
        ));
    }
}
