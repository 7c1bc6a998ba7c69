use std::path::PathBuf;

use rayon::prelude::*;

use qnnp_core::data::{inject_noise, NoiseInjection};
use qnnp_core::mlp::{evaluate, TrainConfig};
use qnnp_core::rng::derive_seed;
use qnnp_core::units::{atomic_to_ev_per_angstrom, ev_per_angstrom_to_atomic, hartree_to_mev, mev_to_hartree};
use qnnp_core::Dataset;

use crate::config::KeyValues;
use crate::datasets::{self, cur_subset, DataSource, Sampling, Splits};
use crate::pipeline::{default_train_config, fit_model, train_config_from_kv, ModelSettings};
use crate::report::{mean_std, Table, Value};
use crate::{Error, Result};

/// Grid of label-noise levels (or training-set sizes) with repeated
/// training runs per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Energy noise levels, meV/atom.
    pub delta_e_mev: Vec<f64>,
    /// Force noise levels, eV/Å.
    pub delta_f_ev_a: Vec<f64>,
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub source: DataSource,
    pub sampling: Sampling,
    pub model: ModelSettings,
    pub train: TrainConfig,
    pub output: PathBuf,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            delta_e_mev: vec![1000.0, 100.0, 10.0, 1.0, 0.1],
            delta_f_ev_a: vec![10.0, 1.0, 0.1, 0.01, 0.001],
            sizes: vec![5, 10, 20],
            repeats: 3,
            source: DataSource::H2(Default::default()),
            sampling: Sampling::default(),
            model: ModelSettings::default(),
            train: default_train_config(),
            output: PathBuf::from("results"),
            seed: 0,
            workers: None,
        }
    }
}

impl SweepConfig {
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        let cfg = SweepConfig {
            delta_e_mev: kv.list_or("grid.delta_e_mev", d.delta_e_mev)?,
            delta_f_ev_a: kv.list_or("grid.delta_f_ev_a", d.delta_f_ev_a)?,
            sizes: kv.list_or("grid.sizes", d.sizes)?,
            repeats: kv.get_or("repeats", d.repeats)?,
            source: DataSource::from_kv(kv)?,
            sampling: Sampling::from_kv(kv)?,
            model: ModelSettings::from_kv(kv)?,
            train: train_config_from_kv(kv, &d.train)?,
            output: kv.get_or("output", d.output)?,
            seed: kv.get_or("seed", d.seed)?,
            workers: kv.get("workers")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta_e_mev.is_empty() || self.delta_f_ev_a.is_empty() || self.sizes.is_empty() {
            return Err(Error::InvalidConfig("noise and size grids must be non-empty".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        let bad = |v: &f64| !(v.is_finite() && *v >= 0.0);
        if self.delta_e_mev.iter().any(bad) || self.delta_f_ev_a.iter().any(bad) {
            return Err(Error::InvalidConfig("noise levels must be finite and non-negative".into()));
        }
        if self.sizes.contains(&0) {
            return Err(Error::InvalidConfig("training-set sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Validation RMSEs of one grid cell over its repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    /// Hartree/atom.
    pub delta_e: f64,
    /// Hartree/Bohr.
    pub delta_f: f64,
    pub size: usize,
    /// Hartree/atom, one per repeat.
    pub rmse_e: Vec<f64>,
    /// Hartree/Bohr, one per repeat when the validation set has forces.
    pub rmse_f: Option<Vec<f64>>,
    pub seed: u64,
}

impl CellResult {
    pub fn rmse_e_mean_std(&self) -> (f64, f64) {
        mean_std(&self.rmse_e)
    }

    pub fn rmse_f_mean_std(&self) -> Option<(f64, f64)> {
        self.rmse_f.as_deref().map(mean_std)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Noise,
    Size,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub cells: Vec<CellResult>,
}

impl SweepResult {
    /// The cell without injected noise and with the largest training set.
    pub fn reference(&self) -> Option<&CellResult> {
        self.cells
            .iter()
            .filter(|c| c.delta_e == 0.0 && c.delta_f == 0.0)
            .max_by_key(|c| c.size)
    }

    /// Means and standard deviations in meV/atom and eV/Å.
    pub fn to_table(&self) -> Table {
        match self.kind {
            SweepKind::Noise => {
                let mut t = Table::new(
                    "noise_sweep",
                    &[
                        "delta_e_mev_per_atom",
                        "delta_f_ev_per_angstrom",
                        "rmse_e_mean_mev_per_atom",
                        "rmse_f_mean_ev_per_angstrom",
                        "rmse_e_std_mev_per_atom",
                        "rmse_f_std_ev_per_angstrom",
                        "repeats",
                        "seed",
                    ],
                );
                for c in &self.cells {
                    let (em, es) = c.rmse_e_mean_std();
                    let f = c.rmse_f_mean_std();
                    t.push(vec![
                        hartree_to_mev(c.delta_e).into(),
                        atomic_to_ev_per_angstrom(c.delta_f).into(),
                        hartree_to_mev(em).into(),
                        f.map(|f| atomic_to_ev_per_angstrom(f.0)).into(),
                        hartree_to_mev(es).into(),
                        f.map(|f| atomic_to_ev_per_angstrom(f.1)).into(),
                        c.rmse_e.len().into(),
                        c.seed.into(),
                    ]);
                }
                t
            }
            SweepKind::Size => {
                let mut t = Table::new(
                    "size_sweep",
                    &[
                        "delta_e_mev_per_atom",
                        "train_size",
                        "rmse_e_mean_mev_per_atom",
                        "rmse_e_std_mev_per_atom",
                        "repeats",
                        "seed",
                    ],
                );
                for c in &self.cells {
                    let (em, es) = c.rmse_e_mean_std();
                    t.push(vec![
                        hartree_to_mev(c.delta_e).into(),
                        c.size.into(),
                        hartree_to_mev(em).into(),
                        hartree_to_mev(es).into(),
                        c.rmse_e.len().into(),
                        Value::Int(c.seed),
                    ]);
                }
                t
            }
        }
    }
}

struct Job {
    cell: usize,
    repeat: usize,
}

/// Injects noise into `train`, fits a model and scores it on the untouched
/// validation set. Returns (RMSE_E, RMSE_F).
fn run_job(
    train: &Dataset,
    validation: &Dataset,
    noise: NoiseInjection,
    model: &ModelSettings,
    config: &TrainConfig,
    model_seed: u64,
) -> Result<(f64, Option<f64>)> {
    let noisy = inject_noise(train, &noise)?;
    let outcome = fit_model(&noisy, model, config, model_seed)?;
    let m = evaluate(&outcome.model, validation)?;
    if !m.rmse_energy.is_finite() || m.rmse_forces.is_some_and(|f| !f.is_finite()) {
        return Err(Error::NonFinite("validation RMSE".into()));
    }
    Ok((m.rmse_energy, m.rmse_forces))
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Cells `(delta_e, delta_f, size)` run `repeats` times. Noise in repeat
/// `r` of cell `c` uses `derive_seed(seed, [c, r, 0])`; the model seed
/// `derive_seed(seed, [r, 1])` is shared by all cells so that cells differ
/// only in their labels.
fn run_cells(
    cells: &[(f64, f64, usize)],
    train_for: &(dyn Fn(usize) -> Result<Dataset> + Sync),
    validation: &Dataset,
    config: &SweepConfig,
    train_cfg: &TrainConfig,
    kind: SweepKind,
) -> Result<SweepResult> {
    let jobs: Vec<Job> = (0..cells.len())
        .flat_map(|cell| (0..config.repeats).map(move |repeat| Job { cell, repeat }))
        .collect();
    let results = in_pool(config.workers, || {
        jobs.par_iter()
            .map(|job| {
                let (de, df, size) = cells[job.cell];
                let label = format!("delta_e={de:e} delta_f={df:e} size={size} repeat={}", job.repeat);
                let noise = NoiseInjection {
                    delta_e: de,
                    delta_f: df,
                    seed: derive_seed(config.seed, &[job.cell as u64, job.repeat as u64, 0]),
                };
                let model_seed = derive_seed(config.seed, &[job.repeat as u64, 1]);
                train_for(size)
                    .and_then(|train| run_job(&train, validation, noise, &config.model, train_cfg, model_seed))
                    .map_err(|e| e.in_cell(label))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut out = Vec::with_capacity(cells.len());
    for (c, &(delta_e, delta_f, size)) in cells.iter().enumerate() {
        let runs = &results[c * config.repeats..(c + 1) * config.repeats];
        let rmse_f = runs.iter().map(|r| r.1).collect::<Option<Vec<f64>>>();
        out.push(CellResult {
            delta_e,
            delta_f,
            size,
            rmse_e: runs.iter().map(|r| r.0).collect(),
            rmse_f,
            seed: derive_seed(config.seed, &[c as u64]),
        });
    }
    Ok(SweepResult { kind, cells: out })
}

/// Noise sweep on pre-built splits. A noiseless reference cell comes first;
/// force noise is skipped when the training set has no forces.
pub fn run_noise_sweep_on(splits: &Splits, config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let has_forces = splits.train.has_forces();
    let mut df_grid: Vec<f64> = if has_forces {
        config.delta_f_ev_a.iter().map(|&f| ev_per_angstrom_to_atomic(f)).collect()
    } else {
        if config.delta_f_ev_a.iter().any(|&f| f > 0.0) {
            log::info!("training set has no forces; force-noise grid skipped");
        }
        vec![0.0]
    };
    if df_grid.is_empty() {
        df_grid.push(0.0);
    }
    let n = splits.train.len();
    let mut cells = vec![(0.0, 0.0, n)];
    for &de in &config.delta_e_mev {
        for &df in &df_grid {
            let cell = (mev_to_hartree(de), df, n);
            if !cells.contains(&cell) {
                cells.push(cell);
            }
        }
    }
    let train = |_: usize| Ok(splits.train.clone());
    run_cells(&cells, &train, &splits.validation, config, &config.train, SweepKind::Noise)
}

/// Loads the configured data and runs [`run_noise_sweep_on`].
pub fn run_noise_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let splits = datasets::load(&config.source, &config.sampling, &config.model, config.seed)?;
    run_noise_sweep_on(&splits, config)
}

fn energy_only(ds: &Dataset) -> Dataset {
    let mut out = ds.clone();
    out.structures.iter_mut().for_each(|s| s.forces = None);
    out
}

/// Energy-only training on CUR-selected subsets of the training pool, for
/// every `(delta_e, size)` pair.
pub fn run_dataset_size_sweep_on(splits: &Splits, config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let pool = energy_only(&splits.train);
    let validation = energy_only(&splits.validation);
    let mut subsets = std::collections::BTreeMap::new();
    for &size in &config.sizes {
        if size > pool.len() {
            return Err(Error::InvalidConfig(format!(
                "training-set size {size} exceeds the pool of {}",
                pool.len()
            )));
        }
        let idx = cur_subset(&pool, size, &config.model, config.seed)?;
        subsets.insert(size, pool.subsample(&idx)?);
    }
    let mut des = vec![0.0];
    des.extend(config.delta_e_mev.iter().filter(|&&d| d > 0.0).map(|&d| mev_to_hartree(d)));
    let mut cells = Vec::new();
    for &de in &des {
        for &size in &config.sizes {
            cells.push((de, 0.0, size));
        }
    }
    let train_cfg = TrainConfig {
        beta: Some(0.0),
        ..config.train.clone()
    };
    let train = |size: usize| Ok(subsets[&size].clone());
    run_cells(&cells, &train, &validation, config, &train_cfg, SweepKind::Size)
}

/// Draws a pool of `sampling.pool` structures and runs
/// [`run_dataset_size_sweep_on`] on it.
pub fn run_dataset_size_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let sampling = Sampling {
        n_train: config.sampling.pool.unwrap_or(config.sampling.n_train),
        pool: None,
        ..config.sampling.clone()
    };
    let splits = datasets::load(&config.source, &sampling, &config.model, config.seed)?;
    run_dataset_size_sweep_on(&splits, config)
}
