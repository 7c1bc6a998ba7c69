use std::path::PathBuf;

use qnnp_core::rng::rng;
use qnnp_quantum::budget::shots_for_probability;
use qnnp_quantum::measure::{readout_probabilities, sample_counts};
use qnnp_quantum::*;

fn h2(r: &str) -> PauliHamiltonian {
    parse_hamiltonian(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../data/h2_sto3g/{r}.ham"))).unwrap()
}

fn plus() -> Vec<C64> {
    let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    vec![a, a]
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

#[test]
fn plus_state_z_average() {
    let z = PauliHamiltonian::parse_str("1 Z").unwrap();
    let est = sample_energy(&plus(), &z, &ShotPlan::uniform(10_000, 4)).unwrap();
    assert!(est.energy.abs() < 5.0 / 100.0);
    assert!((est.eps_stat - 0.01).abs() < 1e-3);
}

#[test]
fn unbiased_over_repeats() {
    let h = h2("1.40");
    let (_, gs) = exact_ground_state(&h).unwrap();
    // a non-eigenstate too
    let mut ry = Circuit::new(2);
    ry.push(Gate::RY(0, Angle::Fixed(0.8))).unwrap();
    ry.push(Gate::RY(1, Angle::Fixed(-1.3))).unwrap();
    ry.push(Gate::CX { control: 0, target: 1 }).unwrap();
    let other = simulate_statevector(&ry, &[]).unwrap();
    for state in [gs, other] {
        let exact = expectation(&state, &h).unwrap();
        let samples: Vec<f64> = (0..200)
            .map(|i| sample_energy(&state, &h, &ShotPlan::uniform(500, i)).unwrap().energy)
            .collect();
        let (m, s) = mean_std(&samples);
        assert!((m - exact).abs() < 5.0 * s / (200f64).sqrt(), "{m} vs {exact}");
        // spread agrees with the per-term variance formula
        let predicted = (variance(&state, &h, VarianceMode::PerTerm).unwrap() / 500.0).sqrt();
        assert!((s / predicted - 1.0).abs() < 0.2, "{s} vs {predicted}");
    }
}

#[test]
fn shot_noise_slope_and_erf_law() {
    let h = h2("1.40");
    let (e0, gs) = exact_ground_state(&h).unwrap();
    let sigma2 = variance(&gs, &h, VarianceMode::PerTerm).unwrap();
    assert!(sigma2 > 0.0);
    let grid = [100u64, 1_000, 10_000, 100_000];
    let reps = 2000;
    let mut logs = Vec::new();
    for (g, &s) in grid.iter().enumerate() {
        let deltas: Vec<f64> = (0..reps)
            .map(|i| sample_energy(&gs, &h, &ShotPlan::uniform(s, (g * reps + i) as u64)).unwrap().energy - e0)
            .collect();
        let (_, std) = mean_std(&deltas);
        logs.push(((s as f64).ln(), std.ln()));
        for factor in [0.5, 1.0, 2.0] {
            let eps = factor * (sigma2 / s as f64).sqrt();
            let predicted = shot_probability(eps, s as f64, sigma2).unwrap();
            let hit = deltas.iter().filter(|d| d.abs() < eps).count() as f64 / reps as f64;
            assert!((hit - predicted).abs() < 0.05, "S = {s}, eps = {eps}: {hit} vs {predicted}");
        }
    }
    let n = logs.len() as f64;
    let (mx, my) = (logs.iter().map(|p| p.0).sum::<f64>() / n, logs.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() < 0.05, "slope {slope}");
}

#[test]
fn budget_scaling() {
    let h = h2("1.40");
    let (_, gs) = exact_ground_state(&h).unwrap();
    let eps = 1e-3;
    let b = estimate_shot_budget(&h, &gs, eps, 0.99).unwrap();
    assert_eq!(b.n_terms, 4);
    assert_eq!(b.total, 4.0 * b.shots_per_term as f64);
    assert!(b.upper_bound_total > b.total);
    let b2 = estimate_shot_budget(&h, &gs, 2.0 * eps, 0.99).unwrap();
    let ratio = b.shots_per_term as f64 / b2.shots_per_term as f64;
    assert!((ratio - 4.0).abs() < 4.0 * 2.0 / b2.shots_per_term as f64, "{ratio}");
    // every term has a definite value on |01>
    let zs = PauliHamiltonian::parse_str("0.3 ZI\n-0.1 IZ\n0.2 ZZ\n1 II").unwrap();
    let mut s = vec![C64::new(0.0, 0.0); 4];
    s[0b10] = C64::new(1.0, 0.0);
    let b = estimate_shot_budget(&zs, &s, 1e-3, 0.99).unwrap();
    assert_eq!((b.shots_per_term, b.total), (1, 3.0));
    assert!(estimate_shot_budget(&zs, &s, 1e-3, 1.0).is_err());
    assert!(estimate_shot_budget(&zs, &s, 1e-3, 0.0).is_err());
    // probability grows with shots
    let mut last = 0.0;
    for s in [1.0, 10.0, 1e3, 1e6, 1e9] {
        let p = shot_probability(1e-3, s, 0.1).unwrap();
        assert!(p >= last);
        last = p;
    }
    assert!(last > 1.0 - 1e-12);
    assert!(shots_for_probability(0.01, 1.0, 0.5).unwrap() > 1);
}

#[test]
fn readout_examples() {
    let mut r = rng(11);
    let counts = sample_counts(&[0.3, 0.2, 0.1, 0.4], 1000, &mut r);
    assert_eq!(apply_readout(&counts, 2, &NoiseModel::ideal(), &mut r), counts);
    let baseline = NoiseModel::baseline();
    let ones = apply_readout(&[100_000, 0], 1, &baseline, &mut r)[1] as f64;
    let sd = (1e5f64 * 0.02 * 0.98).sqrt();
    assert!((ones - 2000.0).abs() < 3.0 * sd);
    let reduced = baseline.clone().scale_readout(0.01);
    assert!((reduced.readout.p0_given_1 - 4e-4).abs() < 1e-18);
    assert!((reduced.readout.p1_given_0 - 2e-4).abs() < 1e-18);
    let zeros = apply_readout(&[0, 100_000], 1, &baseline, &mut r)[0] as f64;
    let sd = (1e5f64 * 0.04 * 0.96).sqrt();
    assert!((zeros - 4000.0).abs() < 3.0 * sd);
}

#[test]
fn mitigation_examples() {
    let readout_only = NoiseModel::baseline().with_coherence(f64::INFINITY, f64::INFINITY);
    let cal = Calibration::from_noise_model(2, &readout_only).unwrap();
    let ideal = [0.05, 0.7, 0.2, 0.05];
    let noisy = readout_probabilities(&ideal, 2, &readout_only);
    for (a, b) in cal.mitigate(&noisy).unwrap().iter().zip(&ideal) {
        assert!((a - b).abs() < 1e-10);
    }
    let id = Calibration::identity(2);
    let counts = [10, 20, 30, 40];
    assert_eq!(mitigate_readout(&counts, &id).unwrap(), vec![0.1, 0.2, 0.3, 0.4]);
    let singular = nalgebra::DMatrix::from_element(2, 2, 0.5);
    assert!(matches!(Calibration::new(singular), Err(Error::SingularCalibration(_))));
    // sampled calibration stays on the simplex even when inversion would not
    let mut r = rng(2);
    let sampled = Calibration::sampled(2, &NoiseModel::baseline(), 2000, &mut r).unwrap();
    let q = mitigate_readout(&[1000, 0, 0, 0], &sampled).unwrap();
    assert!(q.iter().all(|&x| x >= 0.0) && (q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn mitigated_h2_energies_are_closer() {
    let circ = build_ansatz(AnsatzKind::H2Minimal, 2, 0).unwrap();
    let noise = NoiseModel::baseline();
    let cal = Calibration::from_noise_model(2, &noise).unwrap();
    for r in ["0.80", "1.40", "2.00", "3.00"] {
        let h = h2(r);
        let (e0, _) = exact_ground_state(&h).unwrap();
        let theta = vqe(&h, &circ, &OptimizerConfig::default(), &Backend::Exact).unwrap().theta;
        let raw = measure::noisy_energy(&circ, &theta, &h, &noise, None, None).unwrap().energy;
        let fixed = measure::noisy_energy(&circ, &theta, &h, &noise, None, Some(&cal)).unwrap().energy;
        assert!((fixed - e0).abs() < (raw - e0).abs(), "r = {r}: {fixed} {raw} {e0}");
    }
}
