use proptest::prelude::*;
use qnnp_core::descriptors::{
    compute_descriptors, eval_g2, eval_g3, AngularSF, CutoffSpec, DescriptorSet, RadialSF,
    DEFAULT_ZETAS,
};
use qnnp_core::{Element, Structure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn el(s: &str) -> Element {
    Element::new(s).unwrap()
}

fn random_molecule(seed: u64, species: &[&str]) -> Structure {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    loop {
        let pos: Vec<[f64; 3]> = species
            .iter()
            .map(|_| [rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5)])
            .collect();
        let ok = (0..pos.len()).all(|i| {
            (0..i).all(|j| {
                let d: f64 = (0..3).map(|k| (pos[i][k] - pos[j][k]).powi(2)).sum();
                d.sqrt() > 0.8
            })
        });
        if ok {
            return Structure::new(species.iter().map(|s| el(s)).collect(), pos).unwrap();
        }
    }
}

fn water(seed: u64) -> Structure {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut pos = vec![[0.0; 3]];
    for _ in 0..2 {
        let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let r = rng.random_range(1.6..2.1);
        pos.push([v[0] / n * r, v[1] / n * r, v[2] / n * r]);
    }
    Structure::new(vec![el("O"), el("H"), el("H")], pos).unwrap()
}

fn pool(elements: &[&str], r_c: f64) -> DescriptorSet {
    let els: Vec<Element> = elements.iter().map(|s| el(s)).collect();
    DescriptorSet::candidate_pool(&els, 4, 2, &DEFAULT_ZETAS, r_c).unwrap()
}

fn rotation(a: f64, b: f64, c: f64) -> [[f64; 3]; 3] {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let (sc, cc) = c.sin_cos();
    let rz = [[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]];
    let ry = [[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]];
    let rx = [[1.0, 0.0, 0.0], [0.0, cc, -sc], [0.0, sc, cc]];
    let mul = |p: [[f64; 3]; 3], q: [[f64; 3]; 3]| {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = (0..3).map(|k| p[i][k] * q[k][j]).sum();
            }
        }
        r
    };
    mul(mul(rz, ry), rx)
}

fn transformed(s: &Structure, r: [[f64; 3]; 3], t: [f64; 3]) -> Structure {
    let pos = s
        .positions
        .iter()
        .map(|p| {
            let mut q = t;
            for i in 0..3 {
                for k in 0..3 {
                    q[i] += r[i][k] * p[k];
                }
            }
            q
        })
        .collect();
    Structure::new(s.species.clone(), pos).unwrap()
}

fn assert_values_close(a: &Structure, b: &Structure, set: &DescriptorSet, perm: &[usize]) -> Result<(), TestCaseError> {
    let da = compute_descriptors(a, set, false).unwrap();
    let db = compute_descriptors(b, set, false).unwrap();
    for (i, &pi) in perm.iter().enumerate() {
        for (x, y) in da.atoms[i].values.iter().zip(&db.atoms[pi].values) {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0), "{} vs {}", x, y);
        }
    }
    Ok(())
}

const SPECIES: [&str; 5] = ["O", "H", "H", "C", "H"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rigid_motion_invariance(seed in 0u64..10_000, a in 0.0..6.3f64, b in 0.0..6.3f64, c in 0.0..6.3f64,
                               tx in -5.0..5.0f64, ty in -5.0..5.0f64, tz in -5.0..5.0f64) {
        let s = random_molecule(seed, &SPECIES);
        let set = pool(&["C", "H", "O"], 12.0);
        let moved = transformed(&s, rotation(a, b, c), [tx, ty, tz]);
        let id: Vec<usize> = (0..s.n_atoms()).collect();
        assert_values_close(&s, &moved, &set, &id)?;
    }

    #[test]
    fn same_element_permutation_invariance(seed in 0u64..10_000) {
        let s = random_molecule(seed, &SPECIES);
        let set = pool(&["C", "H", "O"], 12.0);
        // swap the H atoms 1 -> 4 -> 2 -> 1
        let perm = [0usize, 4, 1, 3, 2];
        let mut pos = s.positions.clone();
        for (i, &p) in perm.iter().enumerate() {
            pos[p] = s.positions[i];
        }
        let permuted = Structure::new(s.species.clone(), pos).unwrap();
        assert_values_close(&s, &permuted, &set, &perm)?;
    }

    #[test]
    fn gradients_match_finite_differences(seed in 0u64..10_000) {
        let s = random_molecule(seed, &["O", "H", "H", "H"]);
        check_gradients(&s, &pool(&["H", "O"], 6.0))?;
    }
}

fn check_gradients(s: &Structure, set: &DescriptorSet) -> Result<(), TestCaseError> {
    let h = 1e-5;
    let out = compute_descriptors(s, set, false).unwrap();
    for m in 0..s.n_atoms() {
        for k in 0..3 {
            let shifted = |d: f64| {
                let mut t = s.clone();
                t.positions[m][k] += d;
                compute_descriptors(&t, set, false).unwrap()
            };
            let (plus, minus) = (shifted(h), shifted(-h));
            for (i, atom) in out.atoms.iter().enumerate() {
                for j in 0..atom.n_functions() {
                    let fd = (plus.atoms[i].values[j] - minus.atoms[i].values[j]) / (2.0 * h);
                    let analytic = atom.gradient(j).find(|(a, _)| *a == m).map_or(0.0, |(_, g)| g[k]);
                    let scale = atom
                        .gradient(j)
                        .flat_map(|(_, g)| g)
                        .fold(0.0f64, |acc, x| acc.max(x.abs()));
                    prop_assert!(
                        (analytic - fd).abs() <= 1e-6 * scale + 1e-11,
                        "atom {} fn {} wrt {}.{}: {} vs {}", i, j, m, k, analytic, fd
                    );
                }
            }
        }
    }
    Ok(())
}

#[test]
fn water_gradients_match_finite_differences() {
    for seed in 0..5 {
        check_gradients(&water(seed), &pool(&["H", "O"], 12.0)).unwrap();
    }
}

#[test]
fn gradients_vanish_outside_cutoff() {
    let s = Structure::new(vec![el("H"); 3], vec![[0.0; 3], [1.4, 0.0, 0.0], [9.0, 0.0, 0.0]]).unwrap();
    let set = pool(&["H"], 5.0);
    let out = compute_descriptors(&s, &set, false).unwrap();
    assert_eq!(out.atoms[0].neighbors, vec![0, 1]);
    assert_eq!(out.atoms[2].neighbors, vec![2]);
    assert!(out.atoms[2].values.iter().all(|&v| v == 0.0));
}

#[test]
fn neighbor_subsets_sum_to_full_evaluation() {
    let s = random_molecule(7, &["H", "H", "H", "H", "H"]);
    let c = CutoffSpec::new(10.0).unwrap();
    let g2 = RadialSF::new(0.3, 1.0, c, el("H")).unwrap();
    let full = eval_g2(0, &s, &g2).unwrap().value;
    let partial: f64 = (1..5)
        .map(|j| {
            let sub = Structure::new(vec![el("H"); 2], vec![s.positions[0], s.positions[j]]).unwrap();
            eval_g2(0, &sub, &g2).unwrap().value
        })
        .sum();
    assert!((full - partial).abs() < 1e-14 * full.abs().max(1.0));

    let g3 = AngularSF::new(0.05, -1.0, 4.0, c, el("H"), el("H")).unwrap();
    let full = eval_g3(0, &s, &g3).unwrap().value;
    let mut partial = 0.0;
    for j in 1..5 {
        for k in j + 1..5 {
            let sub = Structure::new(vec![el("H"); 3], vec![s.positions[0], s.positions[j], s.positions[k]]).unwrap();
            partial += eval_g3(0, &sub, &g3).unwrap().value;
        }
    }
    assert!((full - partial).abs() < 1e-13 * full.abs().max(1.0));
}

#[test]
fn scaled_gradients_carry_range_factor() {
    let set = pool(&["H", "O"], 12.0);
    let data: qnnp_core::Dataset = (0..4).map(water).collect();
    let fitted = qnnp_core::descriptors::fit_scaling(&data, &set).unwrap();
    let s = water(11);
    let raw = compute_descriptors(&s, &fitted, false).unwrap();
    let scaled = compute_descriptors(&s, &fitted, true).unwrap();
    let h_stats = fitted.get(&el("H")).unwrap().scaling.clone().unwrap();
    let kept: Vec<usize> = (0..h_stats.len()).filter(|&j| !h_stats[j].is_constant()).collect();
    let atom = 1;
    for (out_j, &j) in kept.iter().enumerate() {
        let st = h_stats[j];
        let expect = (raw.atoms[atom].values[j] - st.mean) / st.range();
        assert!((scaled.atoms[atom].values[out_j] - expect).abs() < 1e-12);
        for ((_, a), (_, b)) in raw.atoms[atom].gradient(j).zip(scaled.atoms[atom].gradient(out_j)) {
            for k in 0..3 {
                assert!((a[k] / st.range() - b[k]).abs() <= 1e-12 * b[k].abs().max(1e-12));
            }
        }
    }
}

#[test]
fn unknown_element_rejected() {
    let s = Structure::new(vec![el("N")], vec![[0.0; 3]]).unwrap();
    assert!(compute_descriptors(&s, &pool(&["H"], 6.0), false).is_err());
    let set = pool(&["H"], 6.0);
    let h2 = Structure::new(vec![el("H"); 2], vec![[0.0; 3], [1.4, 0.0, 0.0]]).unwrap();
    assert!(compute_descriptors(&h2, &set, true).is_err(), "scaled evaluation without fitted stats");
}
