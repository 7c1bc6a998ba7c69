use super::structure::Dataset;
use crate::{Error, Result};

fn check_aligned(pred: &Dataset, reference: &Dataset) -> Result<()> {
    if pred.len() != reference.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predicted vs {} reference structures",
            pred.len(),
            reference.len()
        )));
    }
    pred.require_non_empty("rmse")?;
    for (i, (p, r)) in pred.iter().zip(reference).enumerate() {
        if p.n_atoms() != r.n_atoms() {
            return Err(Error::LengthMismatch(format!(
                "structure {i}: {} vs {} atoms",
                p.n_atoms(),
                r.n_atoms()
            )));
        }
    }
    Ok(())
}

/// Energy RMSE per atom, Hartree/atom.
pub fn rmse_energy(pred: &Dataset, reference: &Dataset) -> Result<f64> {
    check_aligned(pred, reference)?;
    let mut sum = 0.0;
    for (i, (p, r)) in pred.iter().zip(reference).enumerate() {
        let n = p.n_atoms() as f64;
        let d = (p.require_energy(i)? - r.require_energy(i)?) / n;
        sum += d * d;
    }
    Ok((sum / pred.len() as f64).sqrt())
}

/// Force-component RMSE, Hartree/Bohr, averaging over the `3 N` components of
/// each structure before averaging over structures.
pub fn rmse_forces(pred: &Dataset, reference: &Dataset) -> Result<f64> {
    check_aligned(pred, reference)?;
    let mut sum = 0.0;
    for (i, (p, r)) in pred.iter().zip(reference).enumerate() {
        let (fp, fr) = (p.require_forces(i)?, r.require_forces(i)?);
        let sq: f64 = fp
            .iter()
            .flatten()
            .zip(fr.iter().flatten())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        sum += sq / (3.0 * p.n_atoms() as f64);
    }
    Ok((sum / pred.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Element, Structure};
    use crate::units::mev_to_hartree;
    use proptest::prelude::*;

    fn labeled(n_atoms: usize, e: f64, f: Option<Vec<[f64; 3]>>) -> Structure {
        let s = Structure::new(vec![Element::new("H").unwrap(); n_atoms], vec![[0.0; 3]; n_atoms])
            .unwrap()
            .with_energy(e);
        match f {
            Some(f) => s.with_forces(f),
            None => s,
        }
    }

    #[test]
    fn energy_cases() {
        let r = Dataset::new(vec![labeled(2, 1.0, None), labeled(3, 2.0, None)]);
        assert_eq!(rmse_energy(&r, &r).unwrap(), 0.0);

        let a = 0.25;
        let p = Dataset::new(vec![labeled(2, 1.0 + 2.0 * a, None), labeled(3, 2.0 - 3.0 * a, None)]);
        assert!((rmse_energy(&p, &r).unwrap() - a).abs() < 1e-15);

        let (e3, e4) = (mev_to_hartree(3.0), mev_to_hartree(4.0));
        let p = Dataset::new(vec![labeled(2, 1.0 + 2.0 * e3, None), labeled(3, 2.0 + 3.0 * e4, None)]);
        let expected = mev_to_hartree(12.5f64.sqrt());
        assert!((rmse_energy(&p, &r).unwrap() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn force_cases() {
        let r = Dataset::new(vec![labeled(1, 0.0, Some(vec![[0.0; 3]]))]);
        assert_eq!(rmse_forces(&r, &r).unwrap(), 0.0);
        let p = Dataset::new(vec![labeled(1, 0.0, Some(vec![[1.0, 2.0, 2.0]]))]);
        assert!((rmse_forces(&p, &r).unwrap() - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let r = Dataset::new(vec![labeled(1, 0.0, None)]);
        let two = Dataset::new(vec![labeled(1, 0.0, None), labeled(1, 0.0, None)]);
        assert!(matches!(rmse_energy(&two, &r), Err(Error::LengthMismatch(_))));
        let other_atoms = Dataset::new(vec![labeled(2, 0.0, None)]);
        assert!(matches!(rmse_energy(&other_atoms, &r), Err(Error::LengthMismatch(_))));
        assert!(matches!(rmse_forces(&r, &r), Err(Error::MissingLabel(_))));
        assert!(rmse_energy(&Dataset::default(), &Dataset::default()).is_err());
    }

    fn arb_pair() -> impl Strategy<Value = (Vec<(usize, f64, f64, [f64; 3], [f64; 3])>, u64)> {
        (
            prop::collection::vec(
                (1usize..4, -5.0..5.0f64, -5.0..5.0f64, prop::array::uniform3(-1.0..1.0f64), prop::array::uniform3(-1.0..1.0f64)),
                1..12,
            ),
            any::<u64>(),
        )
    }

    proptest! {
        #[test]
        fn permutation_invariant_and_nonnegative((rows, seed) in arb_pair()) {
            let build = |rows: &[(usize, f64, f64, [f64; 3], [f64; 3])], pred: bool| -> Dataset {
                rows.iter()
                    .map(|&(n, ep, er, fp, fr)| {
                        let (e, f) = if pred { (ep, fp) } else { (er, fr) };
                        labeled(n, e, Some(vec![f; n]))
                    })
                    .collect()
            };
            let (p, r) = (build(&rows, true), build(&rows, false));
            let e = rmse_energy(&p, &r).unwrap();
            let f = rmse_forces(&p, &r).unwrap();
            prop_assert!(e >= 0.0 && f >= 0.0);

            let mut shuffled = rows.clone();
            let mut rng = crate::rng::rng(seed);
            rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
            let (ps, rs) = (build(&shuffled, true), build(&shuffled, false));
            prop_assert!((rmse_energy(&ps, &rs).unwrap() - e).abs() <= 1e-12 * e.max(1.0));
            prop_assert!((rmse_forces(&ps, &rs).unwrap() - f).abs() <= 1e-12 * f.max(1.0));

            prop_assert_eq!(rmse_energy(&p, &p).unwrap(), 0.0);
            prop_assert_eq!(rmse_forces(&r, &r).unwrap(), 0.0);
        }
    }
}
