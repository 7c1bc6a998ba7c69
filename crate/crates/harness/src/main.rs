use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qnnp_core::data::{parse_structures, write_structures};
use qnnp_core::mlp::{evaluate, load_model, save_model};
use qnnp_core::rng::{derive_seed, rng};
use qnnp_core::selection::{select_rows, structure_feature_matrix};
use qnnp_core::units::{atomic_to_ev_per_angstrom, hartree_to_mev, mev_to_hartree, UnitSystem};
use qnnp_core::Dataset;
use qnnp_harness::config::KeyValues;
use qnnp_harness::datasets::{H2Source, MorseSource};
use qnnp_harness::pipeline::{default_train_config, fit_model_validated, train_config_from_kv, ModelSettings};
use qnnp_harness::report::{emit_report, mean_std, Table, Value};
use qnnp_harness::studies::{
    run_gate_noise_study, run_optimization_noise_study, run_readout_study, HwNoiseConfig, OptNoiseConfig,
};
use qnnp_harness::sweep::{run_dataset_size_sweep, run_noise_sweep, SweepConfig};
use qnnp_harness::{Error, Result};
use qnnp_quantum::label::HamiltonianSource;
use qnnp_quantum::{
    build_ansatz, estimate_shot_budget, exact_ground_state, label_dataset, parse_hamiltonian, sample_energy,
    simulate_statevector, vqe, AnsatzKind, Backend, BondLengthLibrary, EngineConfig, IndexedDir, InitialPoint,
    Mitigation, NoiseModel, OptimizerConfig, ShotPlan,
};

#[derive(Parser)]
#[command(name = "qnnp", version, about = "Neural-network potentials trained on noisy quantum labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings file plus command-line overrides.
#[derive(Args)]
struct ConfigArgs {
    /// key = value settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides a setting, e.g. `--set train.epochs=500`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<KeyValues> {
        let mut kv = match &self.config {
            Some(p) => KeyValues::read_file(p)?,
            None => KeyValues::default(),
        };
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("--set expects KEY=VALUE, got {o:?}")))?;
            kv.set(k.trim(), v.trim());
        }
        Ok(kv)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratedSource {
    H2,
    Morse,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Exact,
    Sampled,
    Noisy,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HwPart {
    All,
    Gate,
    Readout,
}

#[derive(Subcommand)]
enum Command {
    /// Fits descriptors and an MLP to a structure file and saves the model.
    Train(ConfigArgs),
    /// RMSE of a saved model on a labeled structure file.
    Evaluate(ConfigArgs),
    /// Writes model energies and forces for every structure.
    Predict(ConfigArgs),
    /// Writes a labeled synthetic dataset.
    Generate {
        #[arg(long, value_enum)]
        source: GeneratedSource,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Central-difference forces for H2.
        #[arg(long)]
        forces: bool,
        #[arg(long, default_value = "atomic")]
        units: UnitSystem,
        #[arg(long)]
        output: PathBuf,
    },
    /// CUR row selection of structures; CSV on stdout.
    Select {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value = "atomic")]
        units: UnitSystem,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Runs VQE on one Hamiltonian file.
    Vqe {
        #[arg(long)]
        hamiltonian: PathBuf,
        #[arg(long, default_value = "h2_minimal")]
        ansatz: AnsatzKind,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long, value_enum, default_value = "exact")]
        backend: BackendKind,
        /// Shots per Pauli term for sampled and noisy backends.
        #[arg(long)]
        shots: Option<u64>,
        /// Noise model file; the reference device when omitted.
        #[arg(long)]
        noise: Option<PathBuf>,
        /// Calibration shots per basis state for readout mitigation.
        #[arg(long)]
        mitigation_shots: Option<u64>,
        #[arg(long, default_value_t = 200)]
        max_iterations: usize,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Repeated shot-sampled energy estimates.
    Sample {
        #[arg(long)]
        hamiltonian: PathBuf,
        #[arg(long)]
        shots: u64,
        /// Ansatz parameters; the exact ground state when omitted.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
        #[arg(long, default_value = "h2_minimal")]
        ansatz: AnsatzKind,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Shots needed for a target accuracy with a target probability.
    Budget {
        #[arg(long)]
        hamiltonian: PathBuf,
        #[arg(long, default_value_t = 30.0)]
        accuracy_mev: f64,
        #[arg(long, default_value_t = 0.99)]
        probability: f64,
    },
    /// Replaces structure energies with VQE labels.
    Label {
        #[arg(long)]
        data: PathBuf,
        /// Directory with `<index>.ham` files, or a bond-length library
        /// for dimers with `--bond-lengths`.
        #[arg(long)]
        hamiltonians: PathBuf,
        #[arg(long)]
        bond_lengths: bool,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "atomic")]
        units: UnitSystem,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Validation RMSE over a grid of injected label noise.
    SweepNoise(ConfigArgs),
    /// Validation RMSE over label noise and CUR-selected training-set sizes.
    SweepSize(ConfigArgs),
    /// VQE labels with a capped optimizer, smoothed by an MLP.
    StudyOptNoise(ConfigArgs),
    /// Gate-noise and readout-error studies.
    StudyHwNoise {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value = "all")]
        part: HwPart,
    },
    /// Summary of a CSV file.
    Report {
        input: PathBuf,
    },
}

fn read_data(path: &Path, units: UnitSystem) -> Result<Dataset> {
    Ok(parse_structures(path)?.into_atomic(units))
}

fn write_data(ds: &Dataset, path: &Path, units: UnitSystem) -> Result<()> {
    Ok(write_structures(&ds.clone().from_atomic(units), path)?)
}

fn metrics_json(model: &qnnp_core::mlp::MlpModel, ds: &Dataset) -> Result<serde_json::Value> {
    let m = evaluate(model, ds)?;
    Ok(json!({
        "structures": ds.len(),
        "rmse_energy_ha_per_atom": m.rmse_energy,
        "rmse_energy_mev_per_atom": hartree_to_mev(m.rmse_energy),
        "rmse_forces_ha_per_bohr": m.rmse_forces,
        "rmse_forces_ev_per_angstrom": m.rmse_forces.map(atomic_to_ev_per_angstrom),
    }))
}

fn cmd_train(args: &ConfigArgs) -> Result<()> {
    let kv = args.load()?;
    let units: UnitSystem = kv.get_or("units", UnitSystem::Atomic)?;
    let train_path: PathBuf = kv.require("data.train")?;
    let val_path: Option<PathBuf> = kv.get("data.validation")?;
    let model_path: PathBuf = kv.require("model")?;
    let history: Option<PathBuf> = kv.get("history")?;
    let seed: u64 = kv.get_or("seed", 0)?;
    let settings = ModelSettings::from_kv(&kv)?;
    let cfg = train_config_from_kv(&kv, &default_train_config())?;
    kv.finish()?;

    let train = read_data(&train_path, units)?;
    let validation = val_path.map(|p| read_data(&p, units)).transpose()?;
    let out = fit_model_validated(&train, validation.as_ref(), &settings, &cfg, seed)?;
    save_model(&out.model, &model_path)?;
    if let Some(path) = history {
        let mut t = Table::new(
            "history",
            &[
                "epoch",
                "loss",
                "train_rmse_e_mev_per_atom",
                "val_rmse_e_mev_per_atom",
                "train_rmse_f_ev_per_angstrom",
                "val_rmse_f_ev_per_angstrom",
            ],
        );
        for r in &out.history {
            t.push(vec![
                r.epoch.into(),
                r.loss.into(),
                hartree_to_mev(r.train_rmse_energy).into(),
                hartree_to_mev(r.val_rmse_energy).into(),
                r.train_rmse_forces.map(atomic_to_ev_per_angstrom).into(),
                r.val_rmse_forces.map(atomic_to_ev_per_angstrom).into(),
            ]);
        }
        t.write(&path)?;
    }
    let mut summary = json!({
        "model": model_path.display().to_string(),
        "epochs": out.history.len(),
        "best_epoch": out.best_epoch,
        "train": metrics_json(&out.model, &train)?,
    });
    if let Some(v) = &validation {
        summary["validation"] = metrics_json(&out.model, v)?;
    }
    println!("{summary}");
    Ok(())
}

fn cmd_evaluate(args: &ConfigArgs) -> Result<()> {
    let kv = args.load()?;
    let units: UnitSystem = kv.get_or("units", UnitSystem::Atomic)?;
    let model_path: PathBuf = kv.require("model")?;
    let data: PathBuf = kv.require("data")?;
    kv.finish()?;
    let model = load_model(&model_path)?;
    println!("{}", metrics_json(&model, &read_data(&data, units)?)?);
    Ok(())
}

fn cmd_predict(args: &ConfigArgs) -> Result<()> {
    let kv = args.load()?;
    let units: UnitSystem = kv.get_or("units", UnitSystem::Atomic)?;
    let model_path: PathBuf = kv.require("model")?;
    let data: PathBuf = kv.require("data")?;
    let output: PathBuf = kv.require("output")?;
    kv.finish()?;
    let model = load_model(&model_path)?;
    let pred = model.predict_dataset(&read_data(&data, units)?)?;
    write_data(&pred, &output, units)
}

fn cmd_generate(source: GeneratedSource, n: usize, seed: u64, forces: bool, units: UnitSystem, output: &Path) -> Result<()> {
    let mut r = rng(seed);
    let ds = match source {
        GeneratedSource::H2 => {
            let src = H2Source {
                forces,
                ..H2Source::default()
            };
            let lib = src.library()?;
            src.label_exact(&lib, &src.sample(&lib, n, &mut r)?)?
        }
        GeneratedSource::Morse => MorseSource::default().sample(n, &mut r),
    };
    write_data(&ds, output, units)
}

fn cmd_select(data: &Path, n: usize, k: usize, units: UnitSystem, config: &ConfigArgs) -> Result<()> {
    let kv = config.load()?;
    let settings = ModelSettings::from_kv(&kv)?;
    kv.finish()?;
    let ds = read_data(data, units)?;
    let set = qnnp_harness::pipeline::fit_descriptors(&ds, &settings)?;
    let x = structure_feature_matrix(&ds, &set)?;
    let picked = select_rows(&x, n, k)?;
    if picked.exhausted {
        log::warn!("features exhausted after {} of {n} picks", picked.indices.len());
    }
    let mut t = Table::new("selection", &["pick_order", "index", "tag", "epsilon_after"]);
    for (i, ((idx, tag), eps)) in picked.indices.iter().zip(&picked.tags).zip(&picked.errors).enumerate() {
        t.push(vec![i.into(), (*idx).into(), tag.as_str().into(), (*eps).into()]);
    }
    print!("{}", t.to_csv_string()?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_vqe(
    hamiltonian: &Path,
    ansatz: AnsatzKind,
    depth: usize,
    backend: BackendKind,
    shots: Option<u64>,
    noise: Option<&Path>,
    mitigation_shots: Option<u64>,
    max_iterations: usize,
    restarts: usize,
    seed: u64,
) -> Result<()> {
    let h = parse_hamiltonian(hamiltonian)?;
    let circuit = build_ansatz(ansatz, h.n_qubits, depth)?;
    let plan = shots.map(|s| ShotPlan::uniform(s, derive_seed(seed, &[1])));
    let backend = match backend {
        BackendKind::Exact => Backend::Exact,
        BackendKind::Sampled => Backend::Sampled(
            plan.ok_or_else(|| Error::InvalidConfig("the sampled backend needs --shots".into()))?,
        ),
        BackendKind::Noisy => Backend::Noisy {
            noise: match noise {
                Some(p) => NoiseModel::read_file(p)?,
                None => NoiseModel::baseline(),
            },
            shots: plan,
            mitigation: mitigation_shots.map_or(Mitigation::Off, Mitigation::Sampled),
        },
    };
    let opt = OptimizerConfig {
        max_iterations,
        restarts,
        seed: derive_seed(seed, &[0]),
        ..OptimizerConfig::default()
    };
    let res = vqe(&h, &circuit, &opt, &backend)?;
    let (exact, _) = exact_ground_state(&h)?;
    println!(
        "{}",
        json!({
            "energy_ha": res.energy,
            "eps_stat_ha": res.eps_stat,
            "exact_ha": exact,
            "error_ha": res.energy - exact,
            "theta": res.theta,
            "converged": res.converged,
            "iterations": res.iterations,
            "evaluations": res.evaluations,
        })
    );
    Ok(())
}

fn cmd_sample(
    hamiltonian: &Path,
    shots: u64,
    theta: Option<&[f64]>,
    ansatz: AnsatzKind,
    depth: usize,
    repeats: usize,
    seed: u64,
) -> Result<()> {
    let h = parse_hamiltonian(hamiltonian)?;
    let (exact, ground) = exact_ground_state(&h)?;
    let state = match theta {
        Some(t) => simulate_statevector(&build_ansatz(ansatz, h.n_qubits, depth)?, t)?,
        None => ground,
    };
    let estimates = (0..repeats.max(1) as u64)
        .map(|r| sample_energy(&state, &h, &ShotPlan::uniform(shots, derive_seed(seed, &[r]))))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let energies: Vec<f64> = estimates.iter().map(|e| e.energy).collect();
    let (mean, std) = mean_std(&energies);
    println!(
        "{}",
        json!({
            "shots_per_term": shots,
            "repeats": energies.len(),
            "mean_ha": mean,
            "std_ha": std,
            "eps_stat_ha": estimates[0].eps_stat,
            "exact_ground_ha": exact,
            "energies_ha": energies,
        })
    );
    Ok(())
}

fn cmd_budget(hamiltonian: &Path, accuracy_mev: f64, probability: f64) -> Result<()> {
    let h = parse_hamiltonian(hamiltonian)?;
    let (_, ground) = exact_ground_state(&h)?;
    let b = estimate_shot_budget(&h, &ground, mev_to_hartree(accuracy_mev), probability)?;
    println!(
        "{}",
        json!({
            "terms": b.n_terms,
            "sigma2_qc": b.sigma2_qc,
            "sigma2_max": b.sigma2_max,
            "shots_per_term": b.shots_per_term,
            "total_shots": b.total,
            "upper_bound_shots_per_term": b.upper_bound_shots_per_term,
            "upper_bound_total": b.upper_bound_total,
        })
    );
    Ok(())
}

fn engine_from_kv(kv: &KeyValues) -> Result<EngineConfig> {
    let d = EngineConfig::default();
    let seed: u64 = kv.get_or("seed", d.seed)?;
    let shots: Option<u64> = kv.get("shots")?;
    let plan = shots.map(|s| ShotPlan::uniform(s, 0));
    let backend = match kv.get_or("vqe.backend", "exact".to_string())?.as_str() {
        "exact" => Backend::Exact,
        "sampled" => Backend::Sampled(plan.ok_or_else(|| Error::InvalidConfig("vqe.backend = sampled needs shots".into()))?),
        "noisy" => Backend::Noisy {
            noise: match kv.raw("noise.model") {
                Some(p) => NoiseModel::read_file(p)?,
                None => NoiseModel::baseline(),
            },
            shots: plan,
            mitigation: match kv.get::<u64>("mitigation_shots")? {
                Some(n) => Mitigation::Sampled(n),
                None => Mitigation::Off,
            },
        },
        other => return Err(Error::InvalidConfig(format!("unknown vqe.backend {other:?}"))),
    };
    let init = match kv.get::<f64>("vqe.init_scale")? {
        Some(scale) => InitialPoint::Random { scale },
        None => InitialPoint::Zeros,
    };
    Ok(EngineConfig {
        ansatz: kv.get_or("vqe.ansatz", d.ansatz)?,
        depth: kv.get_or("vqe.depth", d.depth)?,
        backend,
        optimizer: OptimizerConfig {
            max_iterations: kv.get_or("vqe.max_iterations", d.optimizer.max_iterations)?,
            restarts: kv.get_or("vqe.restarts", d.optimizer.restarts)?,
            init,
            ..d.optimizer
        },
        repeats: kv.get_or("vqe.repeats", d.repeats)?,
        outlier_mads: match kv.get::<f64>("vqe.outlier_mads")? {
            Some(k) if k > 0.0 => Some(k),
            Some(_) => None,
            None => d.outlier_mads,
        },
        seed,
    })
}

fn cmd_label(data: &Path, dir: &Path, bond_lengths: bool, output: &Path, units: UnitSystem, config: &ConfigArgs) -> Result<()> {
    let kv = config.load()?;
    let engine = engine_from_kv(&kv)?;
    kv.finish()?;
    let ds = read_data(data, units)?;
    let source: Box<dyn HamiltonianSource> = if bond_lengths {
        Box::new(BondLengthLibrary::open(dir)?)
    } else {
        Box::new(IndexedDir::new(dir))
    };
    let report = label_dataset(&ds, source.as_ref(), &engine)?;
    let dropped: usize = report.details.iter().map(|d| d.kept.iter().filter(|k| !**k).count()).sum();
    if dropped > 0 {
        log::info!("{dropped} VQE runs excluded as outliers or unconverged");
    }
    write_data(&report.dataset, output, units)
}

fn emit(tables: &[Table], dir: &Path) -> Result<()> {
    for p in emit_report(tables, dir)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_sweep(args: &ConfigArgs, size: bool) -> Result<()> {
    let kv = args.load()?;
    let cfg = SweepConfig::from_kv(&kv)?;
    kv.finish()?;
    let result = if size {
        run_dataset_size_sweep(&cfg)?
    } else {
        run_noise_sweep(&cfg)?
    };
    emit(&[result.to_table()], &cfg.output)
}

fn cmd_opt_noise(args: &ConfigArgs) -> Result<()> {
    let kv = args.load()?;
    let cfg = OptNoiseConfig::from_kv(&kv)?;
    kv.finish()?;
    emit(&run_optimization_noise_study(&cfg)?.tables(), &cfg.output)
}

fn cmd_hw_noise(args: &ConfigArgs, part: HwPart) -> Result<()> {
    let kv = args.load()?;
    let cfg = HwNoiseConfig::from_kv(&kv)?;
    kv.finish()?;
    let mut tables = Vec::new();
    if part != HwPart::Readout {
        let gate = run_gate_noise_study(&cfg)?;
        match gate.crossover_t1_us() {
            Some(t1) => log::info!("MLP error reaches the noiseless reference at T1 = {t1} us"),
            None => log::info!("MLP error stays above the noiseless reference on this grid"),
        }
        tables.push(gate.table(cfg.seed));
    }
    if part != HwPart::Gate {
        tables.extend(run_readout_study(&cfg)?.tables(cfg.seed));
    }
    emit(&tables, &cfg.output)
}

fn cmd_report(input: &Path) -> Result<()> {
    let t = Table::read(input)?;
    println!("{}: {} rows, {} columns", input.display(), t.rows.len(), t.header.len());
    for (c, name) in t.header.iter().enumerate() {
        let nums: Vec<f64> = t
            .rows
            .iter()
            .filter_map(|r| match &r[c] {
                Value::Num(v) => Some(*v),
                Value::Int(v) => Some(*v as f64),
                _ => None,
            })
            .collect();
        if nums.is_empty() {
            println!("  {name}");
            continue;
        }
        let min = nums.iter().copied().fold(f64::INFINITY, f64::min);
        let max = nums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mean, _) = mean_std(&nums);
        println!("  {name}: min {min:.6e} max {max:.6e} mean {mean:.6e}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Generate {
            source,
            n,
            seed,
            forces,
            units,
            output,
        } => cmd_generate(source, n, seed, forces, units, &output),
        Command::Select { data, n, k, units, config } => cmd_select(&data, n, k, units, &config),
        Command::Vqe {
            hamiltonian,
            ansatz,
            depth,
            backend,
            shots,
            noise,
            mitigation_shots,
            max_iterations,
            restarts,
            seed,
        } => cmd_vqe(
            &hamiltonian,
            ansatz,
            depth,
            backend,
            shots,
            noise.as_deref(),
            mitigation_shots,
            max_iterations,
            restarts,
            seed,
        ),
        Command::Sample {
            hamiltonian,
            shots,
            theta,
            ansatz,
            depth,
            repeats,
            seed,
        } => cmd_sample(&hamiltonian, shots, theta.as_deref(), ansatz, depth, repeats, seed),
        Command::Budget {
            hamiltonian,
            accuracy_mev,
            probability,
        } => cmd_budget(&hamiltonian, accuracy_mev, probability),
        Command::Label {
            data,
            hamiltonians,
            bond_lengths,
            output,
            units,
            config,
        } => cmd_label(&data, &hamiltonians, bond_lengths, &output, units, &config),
        Command::SweepNoise(a) => cmd_sweep(&a, false),
        Command::SweepSize(a) => cmd_sweep(&a, true),
        Command::StudyOptNoise(a) => cmd_opt_noise(&a),
        Command::StudyHwNoise { config, part } => cmd_hw_noise(&config, part),
        Command::Report { input } => cmd_report(&input),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}

