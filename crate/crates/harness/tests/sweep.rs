use qnnp_core::data::{inject_noise, NoiseInjection};
use qnnp_core::mlp::{evaluate, TrainConfig};
use qnnp_core::rng::derive_seed;
use qnnp_core::units::{hartree_to_mev, mev_to_hartree};
use qnnp_harness::config::KeyValues;
use qnnp_harness::datasets::{load, DataSource, H2Source, Sampling, Splits};
use qnnp_harness::pipeline::{default_train_config, fit_model, ModelSettings};
use qnnp_harness::sweep::{run_dataset_size_sweep_on, run_noise_sweep_on, SweepConfig};
use qnnp_harness::Error;

fn quick_config() -> SweepConfig {
    SweepConfig {
        delta_e_mev: vec![100.0, 1.0],
        delta_f_ev_a: vec![1.0],
        repeats: 2,
        train: TrainConfig {
            max_epochs: 150,
            patience: 150,
            ..default_train_config()
        },
        ..SweepConfig::default()
    }
}

fn h2_splits(n_train: usize, n_validation: usize, pool: Option<usize>, seed: u64) -> Splits {
    let sampling = Sampling {
        n_train,
        n_validation,
        pool,
    };
    load(&DataSource::H2(H2Source::default()), &sampling, &ModelSettings::default(), seed).unwrap()
}

#[test]
fn twenty_noiseless_h2_structures_reach_ten_mev() {
    let settings = ModelSettings::default();
    let cfg = default_train_config();
    let mut rmse = Vec::new();
    for seed in 0..4 {
        let s = h2_splits(20, 50, Some(1000), seed);
        assert_eq!(s.train.len(), 20);
        let out = fit_model(&s.train, &settings, &cfg, seed).unwrap();
        let m = evaluate(&out.model, &s.validation).unwrap();
        rmse.push(hartree_to_mev(m.rmse_energy));
    }
    let mean = rmse.iter().sum::<f64>() / rmse.len() as f64;
    eprintln!("validation RMSE per seed {rmse:.2?} meV/atom, mean {mean:.2}");
    assert!(mean <= 10.0, "{mean}");
}

#[test]
fn sweep_is_bitwise_reproducible() {
    let splits = h2_splits(12, 20, None, 3);
    let cfg = quick_config();
    let a = run_noise_sweep_on(&splits, &cfg).unwrap().to_table().to_csv_string().unwrap();
    let b = run_noise_sweep_on(&splits, &cfg).unwrap().to_table().to_csv_string().unwrap();
    assert_eq!(a, b);
    let one = SweepConfig {
        workers: Some(1),
        ..cfg.clone()
    };
    let c = run_noise_sweep_on(&splits, &one).unwrap().to_table().to_csv_string().unwrap();
    assert_eq!(a, c);
    let other = SweepConfig { seed: 1, ..cfg };
    let d = run_noise_sweep_on(&splits, &other).unwrap().to_table().to_csv_string().unwrap();
    assert_ne!(a, d);
}

#[test]
fn energy_only_grid_layout() {
    let splits = h2_splits(10, 10, None, 4);
    let cfg = quick_config();
    let r = run_noise_sweep_on(&splits, &cfg).unwrap();
    // the force grid collapses without forces
    assert_eq!(r.cells.len(), 3);
    let reference = r.reference().unwrap();
    assert_eq!((reference.delta_e, reference.delta_f), (0.0, 0.0));
    assert_eq!(r.cells[0], *reference);
    for c in &r.cells {
        assert_eq!(c.rmse_e.len(), 2);
        assert!(c.rmse_f.is_none());
        assert!(c.rmse_e.iter().all(|v| v.is_finite()));
    }
    let t = r.to_table();
    assert_eq!(t.rows.len(), 3);
    assert_eq!(
        t.header,
        [
            "delta_e_mev_per_atom",
            "delta_f_ev_per_angstrom",
            "rmse_e_mean_mev_per_atom",
            "rmse_f_mean_ev_per_angstrom",
            "rmse_e_std_mev_per_atom",
            "rmse_f_std_ev_per_angstrom",
            "repeats",
            "seed",
        ]
    );
}

#[test]
fn force_grid_is_crossed_with_energy_grid() {
    let source = DataSource::H2(H2Source {
        forces: true,
        ..H2Source::default()
    });
    let sampling = Sampling {
        n_train: 8,
        n_validation: 8,
        pool: None,
    };
    let splits = load(&source, &sampling, &ModelSettings::default(), 5).unwrap();
    assert!(splits.train.has_forces());
    let cfg = SweepConfig {
        delta_f_ev_a: vec![1.0, 0.1],
        repeats: 1,
        train: TrainConfig {
            max_epochs: 30,
            patience: 30,
            ..default_train_config()
        },
        ..quick_config()
    };
    let r = run_noise_sweep_on(&splits, &cfg).unwrap();
    assert_eq!(r.cells.len(), 1 + 2 * 2);
    assert!(r.cells.iter().all(|c| c.rmse_f.as_ref().is_some_and(|f| f.len() == 1)));
}

#[test]
fn validation_labels_are_never_noised() {
    let splits = h2_splits(10, 10, None, 6);
    let before = splits.validation.clone();
    let cfg = SweepConfig {
        delta_e_mev: vec![300.0],
        repeats: 1,
        ..quick_config()
    };
    let r = run_noise_sweep_on(&splits, &cfg).unwrap();
    assert_eq!(splits.validation, before);

    // replay the noisy cell by hand: noise on the training labels only,
    // scored against the clean validation labels
    let noisy = inject_noise(
        &splits.train,
        &NoiseInjection {
            delta_e: mev_to_hartree(300.0),
            delta_f: 0.0,
            seed: derive_seed(cfg.seed, &[1, 0, 0]),
        },
    )
    .unwrap();
    let out = fit_model(&noisy, &cfg.model, &cfg.train, derive_seed(cfg.seed, &[0, 1])).unwrap();
    let clean = evaluate(&out.model, &splits.validation).unwrap().rmse_energy;
    assert_eq!(r.cells[1].rmse_e[0], clean);

    let noised_validation = inject_noise(
        &splits.validation,
        &NoiseInjection {
            delta_e: mev_to_hartree(300.0),
            delta_f: 0.0,
            seed: 99,
        },
    )
    .unwrap();
    let dirty = evaluate(&out.model, &noised_validation).unwrap().rmse_energy;
    assert_ne!(r.cells[1].rmse_e[0], dirty);
}

#[test]
fn size_sweep_uses_cur_subsets_of_the_pool() {
    let splits = h2_splits(20, 10, None, 7);
    let cfg = SweepConfig {
        sizes: vec![5, 10, 20],
        delta_e_mev: vec![10.0],
        repeats: 1,
        ..quick_config()
    };
    let r = run_dataset_size_sweep_on(&splits, &cfg).unwrap();
    assert_eq!(r.cells.len(), 2 * 3);
    let sizes: Vec<usize> = r.cells.iter().map(|c| c.size).collect();
    assert_eq!(sizes, [5, 10, 20, 5, 10, 20]);
    let reference = r.reference().unwrap();
    assert_eq!((reference.size, reference.delta_e), (20, 0.0));
    let t = r.to_table();
    assert_eq!(t.name, "size_sweep");
    assert_eq!(t.rows.len(), 6);
}

#[test]
fn size_beyond_pool_is_rejected() {
    let splits = h2_splits(6, 5, None, 8);
    let cfg = SweepConfig {
        sizes: vec![5, 7],
        ..quick_config()
    };
    let err = run_dataset_size_sweep_on(&splits, &cfg).unwrap_err();
    assert!(matches!(err, Error::InvalidConfig(ref m) if m.contains("exceeds")), "{err}");
}

#[test]
fn training_failure_names_the_cell() {
    let mut splits = h2_splits(6, 5, None, 9);
    splits.train.structures[2].energy = None;
    let err = run_noise_sweep_on(&splits, &quick_config()).unwrap_err();
    assert!(matches!(err, Error::Cell { .. }), "{err}");
    let msg = err.to_string();
    assert!(msg.contains("delta_e=") && msg.contains("repeat="), "{msg}");
}

#[test]
fn config_grids_and_repeats_are_checked() {
    let parse = |text: &str| SweepConfig::from_kv(&KeyValues::parse_str(text, "test").unwrap());
    assert!(parse("").is_ok());
    let cfg = parse("grid.delta_e_mev = 5, 0.5\nrepeats = 4\ndata.pool = 0\nseed = 11").unwrap();
    assert_eq!(cfg.delta_e_mev, [5.0, 0.5]);
    assert_eq!(cfg.repeats, 4);
    assert_eq!(cfg.sampling.pool, None);
    assert_eq!(cfg.seed, 11);
    for bad in [
        "grid.delta_e_mev =",
        "grid.sizes =",
        "repeats = 0",
        "grid.delta_e_mev = -1",
        "grid.delta_f_ev_a = NaN",
        "grid.sizes = 0, 5",
    ] {
        assert!(matches!(parse(bad), Err(Error::InvalidConfig(_))), "{bad}");
    }
}
