use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
use std::path::PathBuf;

use proptest::prelude::*;
use qnnp_quantum::*;

fn h2_file(r: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../data/h2_sto3g/{r}.ham"))
}

fn header_energy(path: &PathBuf) -> f64 {
    let text = std::fs::read_to_string(path).unwrap();
    let line = text.lines().find(|l| l.contains("ground-state energy")).unwrap();
    line.split_whitespace().find_map(|w| w.parse::<f64>().ok()).unwrap()
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[test]
fn duplicates_merge() {
    let h = PauliHamiltonian::parse_str("0.5 ZI\n0.5 ZI # again\n1.0 ZX").unwrap();
    assert_eq!(h.terms.len(), 2);
    assert_eq!(h.terms[0].0, 1.0);
    assert!(PauliHamiltonian::parse_str("1.0 ZA").is_err());
    assert!(PauliHamiltonian::parse_str("1.0 ZI\n1.0 Z").is_err());
}

#[test]
fn small_ground_states() {
    let (e, v) = exact_ground_state(&PauliHamiltonian::parse_str("1 Z").unwrap()).unwrap();
    assert!((e + 1.0).abs() < 1e-14 && (v[1].norm() - 1.0).abs() < 1e-12);
    let (e, v) = exact_ground_state(&PauliHamiltonian::parse_str("1 X").unwrap()).unwrap();
    assert!((e + 1.0).abs() < 1e-14);
    // (|0> - |1>)/sqrt(2) up to a global phase
    let ratio = v[1] / v[0];
    assert!((ratio + c(1.0)).norm() < 1e-12);
    let h = PauliHamiltonian::parse_str("0.5 Z\n0.5 X").unwrap();
    let (e, v) = exact_ground_state(&h).unwrap();
    assert!((e + FRAC_1_SQRT_2).abs() < 1e-14);
    assert!((expectation(&v, &h).unwrap() - e).abs() < 1e-12);
    assert!((variance(&v, &h, VarianceMode::PerTerm).unwrap() - 0.25).abs() < 1e-12);
    assert!((variance(&v, &h, VarianceMode::UpperBound).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn complex_terms_use_hermitian_path() {
    // Y Y has real entries, X Y does not
    let h = PauliHamiltonian::parse_str("0.3 XY\n-0.2 YX\n0.7 ZI").unwrap();
    let (e, v) = exact_ground_state(&h).unwrap();
    let m = qnnp_quantum::exact::dense_matrix(&h).unwrap();
    let eig = m.symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((e - min).abs() < 1e-12);
    assert!((expectation(&v, &h).unwrap() - e).abs() < 1e-12);
}

#[test]
fn h2_files_match_their_headers() {
    for r in ["0.50", "1.40", "2.00", "4.50"] {
        let path = h2_file(r);
        let h = parse_hamiltonian(&path).unwrap();
        assert_eq!(h.n_qubits, 2);
        let (e, _) = exact_ground_state(&h).unwrap();
        assert!((e - header_energy(&path)).abs() < 1e-9, "r = {r}");
    }
}

#[test]
fn statevector_examples() {
    let s = simulate_statevector(&Circuit::new(2), &[]).unwrap();
    assert_eq!(s[0], c(1.0));
    let mut x = Circuit::new(1);
    x.push(Gate::X(0)).unwrap();
    assert_eq!(simulate_statevector(&x, &[]).unwrap()[1], c(1.0));
    let mut ry = Circuit::new(1);
    ry.push(Gate::RY(0, Angle::Slot(0))).unwrap();
    let s = simulate_statevector(&ry, &[FRAC_PI_2]).unwrap();
    assert!((s[0] - c(FRAC_1_SQRT_2)).norm() < 1e-15 && (s[1] - c(FRAC_1_SQRT_2)).norm() < 1e-15);
    assert!(simulate_statevector(&ry, &[]).is_err());
    let z = PauliHamiltonian::parse_str("1 Z").unwrap();
    assert!(expectation(&s, &z).unwrap().abs() < 1e-15);
    assert!(expectation(&s, &PauliHamiltonian::parse_str("1 ZZ").unwrap()).is_err());
}

fn random_circuit(n: usize, ops: &[(u8, usize, usize)]) -> (Circuit, Vec<f64>) {
    let mut circ = Circuit::new(n);
    let mut theta = Vec::new();
    for &(kind, a, b) in ops {
        let (a, b) = (a % n, b % n);
        let g = match kind % 6 {
            0 => Gate::H(a),
            1 => Gate::SX(a),
            2 => Gate::Sdg(a),
            3 => {
                theta.push(0.37 * (theta.len() as f64 + 1.0));
                Gate::RY(a, Angle::Slot(theta.len() - 1))
            }
            4 => Gate::RZ(a, Angle::Fixed(0.9)),
            _ if a != b => Gate::CX { control: a, target: b },
            _ => Gate::X(a),
        };
        circ.push(g).unwrap();
    }
    (circ, theta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn noiseless_density_is_pure(ops in prop::collection::vec((0u8..6, 0usize..3, 0usize..3), 1..25)) {
        let (circ, theta) = random_circuit(3, &ops);
        let psi = simulate_statevector(&circ, &theta).unwrap();
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        let rho = simulate_density(&circ, &theta, &NoiseModel::ideal()).unwrap();
        for r in 0..8 {
            for k in 0..8 {
                prop_assert!((rho.get(r, k) - psi[r] * psi[k].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noisy_channels_keep_trace_and_positivity(
        ops in prop::collection::vec((0u8..6, 0usize..3, 0usize..3), 1..25),
        t1 in 0.05f64..50.0,
        ratio in 0.1f64..2.0,
    ) {
        let (circ, theta) = random_circuit(3, &ops);
        let noise = NoiseModel::baseline().with_coherence(t1, ratio * t1);
        let rho = simulate_density(&circ, &theta, &noise).unwrap();
        prop_assert!((rho.trace() - c(1.0)).norm() < 1e-10);
        let m = nalgebra::DMatrix::from_fn(8, 8, |r, k| rho.get(r, k));
        let eig = m.symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-12));
    }
}

#[test]
fn amplitude_damping_of_one_x() {
    let mut x = Circuit::new(1);
    x.push(Gate::X(0)).unwrap();
    let noise = NoiseModel::baseline().with_coherence(100.0, 100.0);
    let rho = simulate_density(&x, &[], &noise).unwrap();
    let expected = (-35.6e-3f64 / 100.0).exp();
    assert!((rho.get(1, 1).re - expected).abs() < 1e-14);
    assert!(simulate_density(&x, &[], &noise.with_coherence(100.0, 250.0)).is_err());
}
