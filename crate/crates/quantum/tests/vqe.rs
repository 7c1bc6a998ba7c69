use std::path::PathBuf;

use qnnp_core::{Dataset, Element, Structure};
use qnnp_quantum::*;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/h2_sto3g")
}

fn h2(r: f64) -> PauliHamiltonian {
    parse_hamiltonian(data_dir().join(format!("{r:.2}.ham"))).unwrap()
}

fn bond_lengths(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((50.0 + (i as f64) * 300.0 / (n - 1) as f64).round()) / 100.0).collect()
}

fn h2_dataset(rs: &[f64]) -> Dataset {
    let h = Element::new("H").unwrap();
    Dataset::new(
        rs.iter()
            .map(|&r| Structure::new(vec![h.clone(), h.clone()], vec![[0.0; 3], [0.0, 0.0, r]]).unwrap())
            .collect(),
    )
}

#[test]
fn minimal_ansatz_matches_diagonalization() {
    let circ = build_ansatz(AnsatzKind::H2Minimal, 2, 0).unwrap();
    for r in bond_lengths(20) {
        let h = h2(r);
        let (e0, _) = exact_ground_state(&h).unwrap();
        let res = vqe(&h, &circ, &OptimizerConfig::default(), &Backend::Exact).unwrap();
        assert!(res.converged, "r = {r}: {} iterations, {} vs {e0}", res.iterations, res.energy);
        assert!((res.energy - e0).abs() < 1e-6, "r = {r}: {} vs {e0}", res.energy);
    }
}

#[test]
fn capped_budget_leaves_variational_error() {
    let circ = build_ansatz(AnsatzKind::RyCnot, 2, 1).unwrap();
    let h = h2(1.4);
    let (e0, _) = exact_ground_state(&h).unwrap();
    let cfg = OptimizerConfig {
        max_iterations: 3,
        init: InitialPoint::Random { scale: std::f64::consts::PI },
        seed: 5,
        ..Default::default()
    };
    let res = vqe(&h, &circ, &cfg, &Backend::Exact).unwrap();
    assert!(!res.converged);
    assert!(res.energy - e0 > 1e-6);
    assert_eq!(res.iterations, 3);
}

#[test]
fn ry_cnot_restarts_reach_ground_state() {
    let circ = build_ansatz(AnsatzKind::RyCnot, 2, 1).unwrap();
    let cfg = OptimizerConfig {
        restarts: 5,
        max_iterations: 500,
        seed: 9,
        ..Default::default()
    };
    for r in [0.7, 1.4, 3.0] {
        let h = h2(r);
        let (e0, _) = exact_ground_state(&h).unwrap();
        let res = vqe(&h, &circ, &cfg, &Backend::Exact).unwrap();
        assert!((res.energy - e0).abs() < 1e-4, "r = {r}");
    }
}

#[test]
fn sampled_backend_is_reproducible() {
    let circ = build_ansatz(AnsatzKind::H2Minimal, 2, 0).unwrap();
    let h = h2(1.4);
    let (e0, _) = exact_ground_state(&h).unwrap();
    let cfg = OptimizerConfig {
        tolerance: 1e-3,
        ..Default::default()
    };
    let backend = Backend::Sampled(ShotPlan::uniform(20_000, 3));
    let a = vqe(&h, &circ, &cfg, &backend).unwrap();
    let b = vqe(&h, &circ, &cfg, &backend).unwrap();
    assert_eq!(a, b);
    assert!(a.eps_stat > 0.0);
    assert!((a.energy - e0).abs() < 5.0 * a.eps_stat + 2e-3);
    assert_eq!(a.trace.len() as u64 + 1, a.evaluations);
}

#[test]
fn exact_labels_follow_diagonalization() {
    let rs = bond_lengths(20);
    let ds = h2_dataset(&rs);
    let lib = BondLengthLibrary::open(data_dir()).unwrap();
    let report = label_dataset(&ds, &lib, &EngineConfig::default()).unwrap();
    for (s, &r) in report.dataset.structures.iter().zip(&rs) {
        let (e0, _) = exact_ground_state(&h2(r)).unwrap();
        assert!((s.energy.unwrap() - e0).abs() < 1e-6);
        assert!(s.forces.is_none());
    }
}

#[test]
fn repeated_noisy_labels() {
    let rs = [1.0, 1.4, 2.0];
    let ds = h2_dataset(&rs);
    let lib = BondLengthLibrary::open(data_dir()).unwrap();
    let shots = 10;
    let cfg = EngineConfig {
        backend: Backend::Sampled(ShotPlan::uniform(shots, 0)),
        optimizer: OptimizerConfig {
            tolerance: 1e-2,
            ..Default::default()
        },
        repeats: 40,
        outlier_mads: None,
        seed: 17,
        ..Default::default()
    };
    let report = label_dataset(&ds, &lib, &cfg).unwrap();
    for (d, &r) in report.details.iter().zip(&rs) {
        let h = h2(r);
        let (_, gs) = exact_ground_state(&h).unwrap();
        let n = d.energies.len() as f64;
        let mean = d.energies.iter().sum::<f64>() / n;
        let sd = (d.energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        // final estimates are fresh draws near the optimum
        let predicted = (variance(&gs, &h, VarianceMode::PerTerm).unwrap() / shots as f64).sqrt();
        assert!(sd > 0.3 * predicted && sd < 3.0 * predicted, "r = {r}: {sd} vs {predicted}");
        assert!((d.label - mean).abs() < 1e-12);
    }
    let again = label_dataset(&ds, &lib, &cfg).unwrap();
    assert_eq!(again.details, report.details);
}

#[test]
fn missing_hamiltonians() {
    let ds = h2_dataset(&[1.234]);
    let lib = BondLengthLibrary::open(data_dir()).unwrap();
    assert!(matches!(
        label_dataset(&ds, &lib, &EngineConfig::default()),
        Err(Error::MissingHamiltonian { .. })
    ));
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data_dir().join("1.40.ham"), dir.path().join("0.ham")).unwrap();
    let indexed = IndexedDir::new(dir.path());
    let ds = h2_dataset(&[1.4, 1.5]);
    assert!(matches!(
        label_dataset(&ds, &indexed, &EngineConfig::default()),
        Err(Error::MissingHamiltonian { index: 1, .. })
    ));
    let ok = label_dataset(&h2_dataset(&[1.4]), &indexed, &EngineConfig::default()).unwrap();
    assert!((ok.dataset.structures[0].energy.unwrap() + 1.137275936).abs() < 1e-6);
}
