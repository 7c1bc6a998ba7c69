use std::f64::consts::PI;
use std::path::PathBuf;

use rayon::prelude::*;

use qnnp_core::mlp::{evaluate, TrainConfig};
use qnnp_core::rng::derive_seed;
use qnnp_core::units::hartree_to_mev;
use qnnp_core::Dataset;
use qnnp_quantum::{
    label_dataset, AnsatzKind, Backend, BondLengthLibrary, EngineConfig, InitialPoint, Mitigation, NoiseModel,
    OptimizerConfig, ShotPlan,
};

use crate::config::KeyValues;
use crate::datasets::{self, bond_length, DataSource, H2Source, Sampling};
use crate::pipeline::{default_train_config, fit_model, train_config_from_kv, ModelSettings};
use crate::report::{mean_std, Table};
use crate::{Error, Result};

/// Mean and standard deviation of per-atom residuals plus their RMSE,
/// Hartree/atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualStats {
    pub mean: f64,
    pub std: f64,
    pub rmse: f64,
}

impl ResidualStats {
    /// Statistics of `(a - b) / n_atoms` over aligned datasets.
    pub fn between(a: &Dataset, b: &Dataset) -> Result<Self> {
        let r: Vec<f64> = a
            .iter()
            .zip(b)
            .enumerate()
            .map(|(i, (x, y))| -> Result<f64> {
                Ok((x.require_energy(i)? - y.require_energy(i)?) / x.n_atoms() as f64)
            })
            .collect::<Result<_>>()?;
        Ok(Self::of(&r))
    }

    pub fn of(r: &[f64]) -> Self {
        let (mean, std) = mean_std(r);
        let rmse = (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt();
        ResidualStats { mean, std, rmse }
    }
}

fn labeled(ds: &Dataset, lib: &BondLengthLibrary, engine: &EngineConfig, seed: u64) -> Result<Dataset> {
    let cfg = EngineConfig {
        seed,
        ..engine.clone()
    };
    Ok(label_dataset(ds, lib, &cfg)?.dataset)
}

fn h2_source(kv: &KeyValues) -> Result<H2Source> {
    match DataSource::from_kv(kv)? {
        DataSource::H2(h) => Ok(h),
        _ => Err(Error::InvalidConfig("quantum-label studies need data = h2".into())),
    }
}

/// VQE labels with a capped optimizer budget, an MLP trained on them, and
/// both compared to exact diagonalization.
#[derive(Debug, Clone, PartialEq)]
pub struct OptNoiseConfig {
    pub source: H2Source,
    pub sampling: Sampling,
    pub model: ModelSettings,
    pub train: TrainConfig,
    pub engine: EngineConfig,
    pub output: PathBuf,
    pub seed: u64,
}

impl Default for OptNoiseConfig {
    fn default() -> Self {
        OptNoiseConfig {
            source: H2Source::default(),
            sampling: Sampling {
                n_train: 500,
                n_validation: 50,
                pool: None,
            },
            model: ModelSettings::default(),
            train: TrainConfig {
                max_epochs: 2000,
                patience: 2000,
                ..default_train_config()
            },
            engine: EngineConfig {
                ansatz: AnsatzKind::RyCnot,
                depth: 1,
                backend: Backend::Exact,
                optimizer: OptimizerConfig {
                    max_iterations: 20,
                    init: InitialPoint::Random { scale: PI },
                    ..OptimizerConfig::default()
                },
                repeats: 1,
                outlier_mads: None,
                seed: 0,
            },
            output: PathBuf::from("results"),
            seed: 0,
        }
    }
}

impl OptNoiseConfig {
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        let mut sampling = d.sampling.clone();
        sampling.n_train = kv.get_or("data.n_train", sampling.n_train)?;
        sampling.n_validation = kv.get_or("data.n_validation", sampling.n_validation)?;
        sampling.pool = kv.get::<usize>("data.pool")?.filter(|&n| n > 0);
        let optimizer = OptimizerConfig {
            max_iterations: kv.get_or("vqe.max_iterations", d.engine.optimizer.max_iterations)?,
            init: InitialPoint::Random {
                scale: kv.get_or("vqe.init_scale", PI)?,
            },
            ..d.engine.optimizer.clone()
        };
        Ok(OptNoiseConfig {
            source: h2_source(kv)?,
            sampling,
            model: ModelSettings::from_kv(kv)?,
            train: train_config_from_kv(kv, &d.train)?,
            engine: EngineConfig {
                ansatz: kv.get_or("vqe.ansatz", d.engine.ansatz)?,
                depth: kv.get_or("vqe.depth", d.engine.depth)?,
                optimizer,
                repeats: kv.get_or("vqe.repeats", d.engine.repeats)?,
                ..d.engine
            },
            output: kv.get_or("output", d.output)?,
            seed: kv.get_or("seed", d.seed)?,
        })
    }
}

/// Energies of one structure, Hartree.
#[derive(Debug, Clone, PartialEq)]
pub struct OptNoisePoint {
    pub split: &'static str,
    pub bond_length: f64,
    pub exact: f64,
    pub label: f64,
    pub mlp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptNoiseSummary {
    pub split: &'static str,
    pub label_vs_exact: ResidualStats,
    pub mlp_vs_exact: ResidualStats,
    pub mlp_vs_label: ResidualStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptNoiseResult {
    pub points: Vec<OptNoisePoint>,
    pub train: OptNoiseSummary,
    pub validation: OptNoiseSummary,
}

impl OptNoiseResult {
    pub fn tables(&self) -> Vec<Table> {
        let mut pts = Table::new(
            "opt_noise_points",
            &["split", "bond_length_bohr", "e_exact_ha", "e_label_ha", "e_mlp_ha"],
        );
        for p in &self.points {
            pts.push(vec![p.split.into(), p.bond_length.into(), p.exact.into(), p.label.into(), p.mlp.into()]);
        }
        let mut sum = Table::new(
            "opt_noise_summary",
            &[
                "split",
                "comparison",
                "mean_mev_per_atom",
                "std_mev_per_atom",
                "rmse_mev_per_atom",
            ],
        );
        for s in [&self.train, &self.validation] {
            for (name, r) in [
                ("label_vs_exact", s.label_vs_exact),
                ("mlp_vs_exact", s.mlp_vs_exact),
                ("mlp_vs_label", s.mlp_vs_label),
            ] {
                sum.push(vec![
                    s.split.into(),
                    name.into(),
                    hartree_to_mev(r.mean).into(),
                    hartree_to_mev(r.std).into(),
                    hartree_to_mev(r.rmse).into(),
                ]);
            }
        }
        vec![pts, sum]
    }
}

/// Labels training and validation structures with the configured VQE,
/// trains on the training labels and compares labels and predictions
/// with exact ground-state energies.
pub fn run_optimization_noise_study(config: &OptNoiseConfig) -> Result<OptNoiseResult> {
    let lib = config.source.library()?;
    let splits = datasets::load(&DataSource::H2(config.source.clone()), &config.sampling, &config.model, config.seed)?;
    let train = labeled(&splits.train, &lib, &config.engine, derive_seed(config.seed, &[10]))?;
    let validation = labeled(&splits.validation, &lib, &config.engine, derive_seed(config.seed, &[11]))?;
    let model = fit_model(&train, &config.model, &config.train, derive_seed(config.seed, &[12]))?.model;

    let mut points = Vec::new();
    let mut summary = |split: &'static str, exact: &Dataset, labels: &Dataset| -> Result<OptNoiseSummary> {
        let pred = model.predict_dataset(exact)?;
        for ((e, l), p) in exact.iter().zip(labels).zip(&pred) {
            points.push(OptNoisePoint {
                split,
                bond_length: bond_length(e),
                exact: e.energy.unwrap_or(f64::NAN),
                label: l.energy.unwrap_or(f64::NAN),
                mlp: p.energy.unwrap_or(f64::NAN),
            });
        }
        Ok(OptNoiseSummary {
            split,
            label_vs_exact: ResidualStats::between(labels, exact)?,
            mlp_vs_exact: ResidualStats::between(&pred, exact)?,
            mlp_vs_label: ResidualStats::between(&pred, labels)?,
        })
    };
    let train_summary = summary("train", &splits.train, &train)?;
    let validation_summary = summary("validation", &splits.validation, &validation)?;
    Ok(OptNoiseResult {
        points,
        train: train_summary,
        validation: validation_summary,
    })
}

/// Gate-noise sweep over T1 = T2 and the readout-error study on H2.
#[derive(Debug, Clone, PartialEq)]
pub struct HwNoiseConfig {
    pub source: H2Source,
    pub sampling: Sampling,
    pub model: ModelSettings,
    pub train: TrainConfig,
    /// T1 = T2 levels, microseconds.
    pub t1_us: Vec<f64>,
    /// Independent training sets per level.
    pub n_sets: usize,
    pub baseline: NoiseModel,
    pub readout_scales: Vec<f64>,
    /// Shots per Pauli term in the readout study.
    pub shots: u64,
    /// Shots per basis state for the calibration matrix.
    pub calibration_shots: u64,
    /// Bond lengths on the mitigation energy curve.
    pub n_curve: usize,
    pub optimizer: OptimizerConfig,
    pub output: PathBuf,
    pub seed: u64,
}

impl Default for HwNoiseConfig {
    fn default() -> Self {
        HwNoiseConfig {
            source: H2Source::default(),
            sampling: Sampling {
                n_train: 20,
                n_validation: 20,
                pool: Some(1000),
            },
            model: ModelSettings::default(),
            train: default_train_config(),
            t1_us: vec![25.0, 50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0],
            n_sets: 5,
            baseline: NoiseModel::baseline(),
            readout_scales: vec![1.0, 0.01],
            shots: 100_000,
            calibration_shots: 100_000,
            n_curve: 20,
            optimizer: OptimizerConfig::default(),
            output: PathBuf::from("results"),
            seed: 0,
        }
    }
}

impl HwNoiseConfig {
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        let baseline = match kv.raw("noise.model") {
            Some(p) => NoiseModel::read_file(p)?,
            None => d.baseline.clone(),
        };
        let mut sampling = d.sampling.clone();
        sampling.n_train = kv.get_or("data.n_train", sampling.n_train)?;
        sampling.n_validation = kv.get_or("data.n_validation", sampling.n_validation)?;
        sampling.pool = match kv.get::<usize>("data.pool")? {
            Some(0) => None,
            Some(n) => Some(n),
            None => sampling.pool,
        };
        let cfg = HwNoiseConfig {
            source: h2_source(kv)?,
            sampling,
            model: ModelSettings::from_kv(kv)?,
            train: train_config_from_kv(kv, &d.train)?,
            t1_us: kv.list_or("grid.t1_us", d.t1_us)?,
            n_sets: kv.get_or("sets", d.n_sets)?,
            baseline,
            readout_scales: kv.list_or("grid.readout_scales", d.readout_scales)?,
            shots: kv.get_or("shots", d.shots)?,
            calibration_shots: kv.get_or("calibration_shots", d.calibration_shots)?,
            n_curve: kv.get_or("curve_points", d.n_curve)?,
            optimizer: OptimizerConfig {
                max_iterations: kv.get_or("vqe.max_iterations", d.optimizer.max_iterations)?,
                ..d.optimizer
            },
            output: kv.get_or("output", d.output)?,
            seed: kv.get_or("seed", d.seed)?,
        };
        if cfg.n_sets == 0 || cfg.shots == 0 || cfg.calibration_shots == 0 {
            return Err(Error::InvalidConfig("sets and shot counts must be positive".into()));
        }
        Ok(cfg)
    }

    fn engine(&self, backend: Backend) -> EngineConfig {
        EngineConfig {
            ansatz: AnsatzKind::H2Minimal,
            depth: 1,
            backend,
            optimizer: self.optimizer.clone(),
            repeats: 1,
            outlier_mads: None,
            seed: 0,
        }
    }

    /// Training sets (exact labels) and the shared validation set.
    fn datasets(&self) -> Result<(Vec<Dataset>, Dataset)> {
        let source = DataSource::H2(self.source.clone());
        let validation = datasets::load(&source, &self.sampling, &self.model, self.seed)?.validation;
        let sets = (0..self.n_sets as u64)
            .map(|s| Ok(datasets::load(&source, &self.sampling, &self.model, derive_seed(self.seed, &[s]))?.train))
            .collect::<Result<Vec<_>>>()?;
        Ok((sets, validation))
    }
}

/// One T1 = T2 level of the gate-noise sweep; RMSEs in Hartree/atom
/// against noiseless VQE energies of the validation set.
#[derive(Debug, Clone, PartialEq)]
pub struct GateNoiseRow {
    pub t1_us: f64,
    /// Noisy validation labels.
    pub validation_rmse: f64,
    /// One per training set.
    pub mlp_rmse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateNoiseResult {
    pub rows: Vec<GateNoiseRow>,
    /// MLPs trained on noiseless labels, one per training set.
    pub reference_rmse: Vec<f64>,
}

impl GateNoiseResult {
    pub fn table(&self, seed: u64) -> Table {
        let mut t = Table::new(
            "hw_gate_noise",
            &[
                "t1_us",
                "t2_us",
                "validation_rmse_mev_per_atom",
                "mlp_rmse_mean_mev_per_atom",
                "mlp_rmse_std_mev_per_atom",
                "reference_rmse_mean_mev_per_atom",
                "reference_rmse_std_mev_per_atom",
                "sets",
                "seed",
            ],
        );
        let (rm, rs) = mean_std(&self.reference_rmse);
        for r in &self.rows {
            let (m, s) = mean_std(&r.mlp_rmse);
            t.push(vec![
                r.t1_us.into(),
                r.t1_us.into(),
                hartree_to_mev(r.validation_rmse).into(),
                hartree_to_mev(m).into(),
                hartree_to_mev(s).into(),
                hartree_to_mev(rm).into(),
                hartree_to_mev(rs).into(),
                r.mlp_rmse.len().into(),
                seed.into(),
            ]);
        }
        t
    }

    /// Smallest T1 whose mean MLP RMSE lies within one standard deviation
    /// of the noiseless reference.
    pub fn crossover_t1_us(&self) -> Option<f64> {
        let (rm, rs) = mean_std(&self.reference_rmse);
        self.rows
            .iter()
            .find(|r| mean_std(&r.mlp_rmse).0 <= rm + rs.max(f64::EPSILON))
            .map(|r| r.t1_us)
    }
}

fn train_and_score(train: &Dataset, reference: &Dataset, config: &HwNoiseConfig, seed: u64) -> Result<f64> {
    let model = fit_model(train, &config.model, &config.train, seed)?.model;
    Ok(evaluate(&model, reference)?.rmse_energy)
}

/// Labels every training set and the validation set at each T1 = T2
/// level (infinite-shot limit, no readout error), trains one MLP per set
/// and scores it against noiseless VQE validation energies.
pub fn run_gate_noise_study(config: &HwNoiseConfig) -> Result<GateNoiseResult> {
    let lib = config.source.library()?;
    let (sets, validation) = config.datasets()?;
    let exact_engine = config.engine(Backend::Exact);
    let reference = labeled(&validation, &lib, &exact_engine, derive_seed(config.seed, &[20]))?;
    let model_seed = |s: usize| derive_seed(config.seed, &[21, s as u64]);

    let clean: Vec<Dataset> = sets
        .iter()
        .enumerate()
        .map(|(s, ds)| labeled(ds, &lib, &exact_engine, derive_seed(config.seed, &[22, s as u64])))
        .collect::<Result<_>>()?;
    let reference_rmse = clean
        .par_iter()
        .enumerate()
        .map(|(s, ds)| train_and_score(ds, &reference, config, model_seed(s)).map_err(|e| e.in_cell(format!("reference set={s}"))))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(config.t1_us.len());
    for (level, &t1) in config.t1_us.iter().enumerate() {
        let cell = |s: &str| format!("t1_us={t1} {s}");
        let noise = config.baseline.clone().with_coherence(t1, t1).without_readout_error();
        noise.validate().map_err(|e| Error::from(e).in_cell(cell("noise model")))?;
        let engine = config.engine(Backend::Noisy {
            noise,
            shots: None,
            mitigation: Mitigation::Off,
        });
        let lv = level as u64;
        let noisy_val = labeled(&validation, &lib, &engine, derive_seed(config.seed, &[23, lv]))
            .map_err(|e| e.in_cell(cell("validation")))?;
        let validation_rmse = ResidualStats::between(&noisy_val, &reference)?.rmse;
        let mlp_rmse = sets
            .par_iter()
            .enumerate()
            .map(|(s, ds)| {
                labeled(ds, &lib, &engine, derive_seed(config.seed, &[24, lv, s as u64]))
                    .and_then(|train| train_and_score(&train, &reference, config, model_seed(s)))
                    .map_err(|e| e.in_cell(cell(&format!("set={s}"))))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(GateNoiseRow {
            t1_us: t1,
            validation_rmse,
            mlp_rmse,
        });
    }
    Ok(GateNoiseResult { rows, reference_rmse })
}

/// One readout-error level; RMSEs in Hartree/atom.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutRow {
    pub scale: f64,
    /// MLP against the noisy validation labels it was validated on.
    pub mlp_vs_labels: f64,
    /// MLP against exact validation energies.
    pub mlp_vs_exact: f64,
    /// Noisy validation labels against exact energies.
    pub labels_vs_exact: f64,
}

/// Energies along the dissociation curve, Hartree.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub bond_length: f64,
    pub exact: f64,
    pub unmitigated: f64,
    pub mitigated: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutResult {
    pub rows: Vec<ReadoutRow>,
    pub curve: Vec<CurvePoint>,
}

impl ReadoutResult {
    pub fn tables(&self, seed: u64) -> Vec<Table> {
        let mut t = Table::new(
            "hw_readout",
            &[
                "readout_scale",
                "mlp_vs_labels_rmse_mev_per_atom",
                "mlp_vs_exact_rmse_mev_per_atom",
                "labels_vs_exact_rmse_mev_per_atom",
                "seed",
            ],
        );
        for r in &self.rows {
            t.push(vec![
                r.scale.into(),
                hartree_to_mev(r.mlp_vs_labels).into(),
                hartree_to_mev(r.mlp_vs_exact).into(),
                hartree_to_mev(r.labels_vs_exact).into(),
                seed.into(),
            ]);
        }
        let mut c = Table::new(
            "hw_mitigation_curve",
            &["bond_length_bohr", "e_exact_ha", "e_unmitigated_ha", "e_mitigated_ha"],
        );
        for p in &self.curve {
            c.push(vec![p.bond_length.into(), p.exact.into(), p.unmitigated.into(), p.mitigated.into()]);
        }
        vec![t, c]
    }
}

/// Readout study at `shots` per term on top of the baseline gate noise:
/// for each readout scale, label one training and one validation set,
/// train an MLP and score it; then the dissociation curve with and
/// without readout mitigation at baseline readout error.
pub fn run_readout_study(config: &HwNoiseConfig) -> Result<ReadoutResult> {
    let lib = config.source.library()?;
    let (sets, validation) = config.datasets()?;
    let train = &sets[0];
    let exact = labeled(&validation, &lib, &config.engine(Backend::Exact), 0)?;
    let plan = ShotPlan::uniform(config.shots, 0);

    let rows = config
        .readout_scales
        .iter()
        .enumerate()
        .map(|(k, &scale)| {
            let noise = config.baseline.clone().scale_readout(scale);
            let engine = config.engine(Backend::Noisy {
                noise,
                shots: Some(plan.clone()),
                mitigation: Mitigation::Off,
            });
            let k = k as u64;
            let cell = format!("readout_scale={scale}");
            let run = || -> Result<ReadoutRow> {
                let tr = labeled(train, &lib, &engine, derive_seed(config.seed, &[30, k]))?;
                let va = labeled(&validation, &lib, &engine, derive_seed(config.seed, &[31, k]))?;
                let model = fit_model(&tr, &config.model, &config.train, derive_seed(config.seed, &[32]))?.model;
                Ok(ReadoutRow {
                    scale,
                    mlp_vs_labels: evaluate(&model, &va)?.rmse_energy,
                    mlp_vs_exact: evaluate(&model, &exact)?.rmse_energy,
                    labels_vs_exact: ResidualStats::between(&va, &exact)?.rmse,
                })
            };
            run().map_err(|e| e.in_cell(cell))
        })
        .collect::<Result<Vec<_>>>()?;

    let grid = config.source.grid(&lib)?;
    let n = config.n_curve.min(grid.len()).max(1);
    let rs: Vec<f64> = (0..n)
        .map(|i| grid[if n == 1 { 0 } else { i * (grid.len() - 1) / (n - 1) }])
        .collect();
    let curve_set = Dataset::new(rs.iter().map(|&r| datasets::dimer(r, &mut qnnp_core::rng::rng(0))).collect());
    let curve_exact = labeled(&curve_set, &lib, &config.engine(Backend::Exact), 0)?;
    let noisy = |mitigation: Mitigation| -> Result<Dataset> {
        let engine = config.engine(Backend::Noisy {
            noise: config.baseline.clone(),
            shots: Some(plan.clone()),
            mitigation,
        });
        labeled(&curve_set, &lib, &engine, derive_seed(config.seed, &[33]))
    };
    let unmitigated = noisy(Mitigation::Off).map_err(|e| e.in_cell("curve unmitigated"))?;
    let mitigated = noisy(Mitigation::Sampled(config.calibration_shots)).map_err(|e| e.in_cell("curve mitigated"))?;
    let curve = rs
        .iter()
        .zip(curve_exact.iter().zip(unmitigated.iter().zip(&mitigated)))
        .map(|(&r, (e, (u, m)))| CurvePoint {
            bond_length: r,
            exact: e.energy.unwrap_or(f64::NAN),
            unmitigated: u.energy.unwrap_or(f64::NAN),
            mitigated: m.energy.unwrap_or(f64::NAN),
        })
        .collect();
    Ok(ReadoutResult { rows, curve })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HwNoiseResult {
    pub gate: GateNoiseResult,
    pub readout: ReadoutResult,
}

impl HwNoiseResult {
    pub fn tables(&self, seed: u64) -> Vec<Table> {
        let mut t = vec![self.gate.table(seed)];
        t.extend(self.readout.tables(seed));
        t
    }
}

pub fn run_hardware_noise_study(config: &HwNoiseConfig) -> Result<HwNoiseResult> {
    Ok(HwNoiseResult {
        gate: run_gate_noise_study(config)?,
        readout: run_readout_study(config)?,
    })
}
