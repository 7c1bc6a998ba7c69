use qnnp_core::data::compute_normalization;
use qnnp_core::descriptors::{fit_scaling, DescriptorSet, DEFAULT_ZETAS};
use qnnp_core::mlp::{init_model, train, Activation, MlpArchitecture, MlpModel, TrainConfig, TrainOutcome};
use qnnp_core::rng::derive_seed;
use qnnp_core::selection::{atomic_feature_matrix, select_columns};
use qnnp_core::{Dataset, Element};

use crate::config::KeyValues;
use crate::Result;

/// Descriptor pool and network shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSettings {
    pub n_radial: usize,
    pub n_eta: usize,
    pub zetas: Vec<f64>,
    /// Bohr.
    pub cutoff: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// CUR-selected descriptors per element; `None` keeps all non-constant
    /// ones.
    pub n_features: Option<usize>,
    /// Singular vectors used in CUR scores.
    pub cur_k: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            n_radial: 12,
            n_eta: 2,
            zetas: DEFAULT_ZETAS.to_vec(),
            cutoff: 6.0,
            hidden: vec![10, 10],
            activation: Activation::Tanh,
            n_features: None,
            cur_k: 1,
        }
    }
}

impl ModelSettings {
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        Ok(ModelSettings {
            n_radial: kv.get_or("descriptors.n_radial", d.n_radial)?,
            n_eta: kv.get_or("descriptors.n_eta", d.n_eta)?,
            zetas: kv.list_or("descriptors.zetas", d.zetas)?,
            cutoff: kv.get_or("descriptors.cutoff", d.cutoff)?,
            hidden: kv.list_or("mlp.hidden", d.hidden)?,
            activation: kv.get_or("mlp.activation", d.activation)?,
            n_features: kv.get("mlp.features")?,
            cur_k: kv.get_or("select.k", d.cur_k)?,
        })
    }
}

/// Trainer defaults for the small molecular sets used here.
pub fn default_train_config() -> TrainConfig {
    TrainConfig {
        max_epochs: 20_000,
        batch_size: 32,
        learning_rate: 1e-2,
        lr_decay: 0.9997,
        min_learning_rate: 1e-4,
        beta: None,
        validation_fraction: 0.0,
        seed: 0,
        patience: 20_000,
    }
}

/// Trainer settings from `train.*` keys, falling back to `defaults`.
pub fn train_config_from_kv(kv: &KeyValues, defaults: &TrainConfig) -> Result<TrainConfig> {
    let d = defaults.clone();
    let cfg = TrainConfig {
        max_epochs: kv.get_or("train.epochs", d.max_epochs)?,
        batch_size: kv.get_or("train.batch_size", d.batch_size)?,
        learning_rate: kv.get_or("train.learning_rate", d.learning_rate)?,
        lr_decay: kv.get_or("train.lr_decay", d.lr_decay)?,
        min_learning_rate: kv.get_or("train.min_learning_rate", d.min_learning_rate)?,
        beta: kv.get("train.beta")?.or(d.beta),
        validation_fraction: kv.get_or("train.validation_fraction", d.validation_fraction)?,
        seed: kv.get_or("train.seed", d.seed)?,
        patience: kv.get_or("train.patience", d.patience)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Descriptor set fitted to `train`: candidate pool, scaling from the
/// training structures only, then optional CUR feature selection.
pub fn fit_descriptors(train: &Dataset, settings: &ModelSettings) -> Result<DescriptorSet> {
    let elements: Vec<Element> = train.elements().into_iter().collect();
    let pool = DescriptorSet::candidate_pool(&elements, settings.n_radial, settings.n_eta, &settings.zetas, settings.cutoff)?;
    let mut set = fit_scaling(train, &pool)?;
    if let Some(n) = settings.n_features {
        for e in &elements {
            let (x, keep) = atomic_feature_matrix(train, &set, e)?;
            let k = settings.cur_k.min(x.nrows()).min(x.ncols()).max(1);
            let picked = select_columns(&x, n.min(x.ncols()), k, None)?;
            let indices: Vec<usize> = picked.indices.iter().map(|&c| keep[c]).collect();
            set = set.select(e, &indices)?;
        }
    }
    Ok(set)
}

/// Full fit: descriptors, normalization, seeded initialization and
/// training. Initialization uses `derive_seed(seed, [0])`, shuffling
/// `derive_seed(seed, [1])`.
pub fn fit_model(train_set: &Dataset, settings: &ModelSettings, config: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    fit_model_validated(train_set, None, settings, config, seed)
}

/// [`fit_model`] with an explicit validation set for model selection.
pub fn fit_model_validated(
    train_set: &Dataset,
    validation: Option<&Dataset>,
    settings: &ModelSettings,
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    let set = fit_descriptors(train_set, settings)?;
    let arch = MlpArchitecture::uniform(&set, &settings.hidden, settings.activation)?;
    let norm = compute_normalization(train_set)?;
    let model: MlpModel = init_model(arch, set, norm, derive_seed(seed, &[0]))?;
    let cfg = TrainConfig {
        seed: derive_seed(seed, &[1]),
        ..config.clone()
    };
    Ok(train(&model, train_set, validation, &cfg)?)
}
