use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::model::{MlpModel, Prepared, Scratch};
use crate::data::Dataset;
use crate::{Error, Result};

/// Optimizer and early-stopping settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplies the learning rate after every epoch.
    pub lr_decay: f64,
    pub min_learning_rate: f64,
    /// Force-loss weight; `None` uses 1 when every training structure has
    /// forces and 0 otherwise.
    pub beta: Option<f64>,
    /// Share of the training set held out when no validation set is given.
    pub validation_fraction: f64,
    pub seed: u64,
    /// Epochs without a new best validation RMSE before stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 1000,
            batch_size: 32,
            learning_rate: 1e-3,
            lr_decay: 1.0,
            min_learning_rate: 0.0,
            beta: None,
            validation_fraction: 0.1,
            seed: 0,
            patience: 50,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.batch_size >= 1
            && self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.lr_decay > 0.0
            && self.lr_decay <= 1.0
            && self.min_learning_rate >= 0.0
            && self.beta.is_none_or(|b| b >= 0.0 && b.is_finite())
            && (0.0..1.0).contains(&self.validation_fraction);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid training config: {self:?}")))
        }
    }
}

/// RMSEs after one epoch, Hartree/atom and Hartree/Bohr.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_rmse_energy: f64,
    pub train_rmse_forces: Option<f64>,
    pub val_rmse_energy: f64,
    pub val_rmse_forces: Option<f64>,
    /// Best validation energy RMSE so far.
    pub best_val_rmse_energy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the lowest validation energy RMSE seen.
    pub model: MlpModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * grad[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Energy and force RMSE in physical units over prepared structures.
fn rmse(model: &MlpModel, params: &[f64], set: &[Prepared], scratch: &mut Scratch, forces: bool) -> (f64, Option<f64>) {
    let mut se = 0.0;
    let mut sf = 0.0;
    for p in set {
        let raw = model.predict_raw(params, p, scratch, forces);
        let n = p.n_atoms as f64;
        let de = (raw.energy - p.energy.expect("labels checked")) / n;
        se += de * de;
        if forces {
            let f_ref = p.forces.as_ref().expect("labels checked");
            let mut s = 0.0;
            for (a, b) in raw.forces.iter().zip(f_ref) {
                for k in 0..3 {
                    s += (a[k] - b[k]).powi(2);
                }
            }
            sf += s / (3.0 * n);
        }
    }
    let m = set.len() as f64;
    let e = (se / m).sqrt() / model.norm.c_energy;
    let f = forces.then(|| (sf / m).sqrt() / model.norm.force_factor());
    (e, f)
}

/// Adam training with shuffled mini-batches. After every epoch the RMSEs
/// are recorded and the parameters with the lowest validation energy RMSE
/// are kept; training stops after `patience` epochs without improvement.
///
/// Without an explicit validation set, `validation_fraction` of `train_set`
/// is held out (seeded shuffle). With a zero fraction the training RMSE
/// drives model selection.
pub fn train(
    model: &MlpModel,
    train_set: &Dataset,
    validation: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    train_set.require_non_empty("training")?;
    if !train_set.has_energies() {
        return Err(Error::MissingLabel("training structures need energies".into()));
    }
    let beta = config.beta.unwrap_or(if train_set.has_forces() { 1.0 } else { 0.0 });
    if beta > 0.0 && !train_set.has_forces() {
        return Err(Error::MissingLabel(format!("force weight {beta} but training set lacks forces")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let all = model.prepare_all(train_set)?;
    let (fit, val): (Vec<Prepared>, Vec<Prepared>) = match validation {
        Some(v) => {
            v.require_non_empty("validation")?;
            if !v.has_energies() {
                return Err(Error::MissingLabel("validation structures need energies".into()));
            }
            (all, model.prepare_all(v)?)
        }
        None => {
            let n_val = (config.validation_fraction * all.len() as f64).round() as usize;
            let n_val = n_val.min(all.len().saturating_sub(1));
            let mut idx: Vec<usize> = (0..all.len()).collect();
            idx.shuffle(&mut rng);
            let is_val: Vec<bool> = {
                let mut v = vec![false; all.len()];
                idx[..n_val].iter().for_each(|&i| v[i] = true);
                v
            };
            let mut fit = Vec::new();
            let mut val = Vec::new();
            for (p, v) in all.into_iter().zip(is_val) {
                if v {
                    val.push(p)
                } else {
                    fit.push(p)
                }
            }
            (fit, val)
        }
    };
    let val_forces = !val.is_empty() && val.iter().all(|p| p.forces.is_some());
    let fit_forces = fit.iter().all(|p| p.forces.is_some());

    let mut scratch = model.scratch();
    let mut params = model.params.clone();
    let mut best = model.clone();
    let mut best_rmse = f64::INFINITY;
    let mut best_epoch = None;
    let mut history = Vec::new();
    let mut adam = Adam::new(params.len());
    let mut grad = vec![0.0; params.len()];
    let mut order: Vec<usize> = (0..fit.len()).collect();
    let mut lr = config.learning_rate;
    let mut stale = 0;
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Prepared> = chunk.iter().map(|&i| &fit[i]).collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = model.loss_prepared(&params, &batch, beta, &mut scratch, &mut grad)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    message: format!("non-finite loss {loss} at learning rate {lr:e}"),
                });
            }
            epoch_loss += loss * chunk.len() as f64 / fit.len() as f64;
            adam.step(&mut params, &grad, lr);
        }
        lr = (lr * config.lr_decay).max(config.min_learning_rate);

        let (tr_e, tr_f) = rmse(model, &params, &fit, &mut scratch, fit_forces);
        let (va_e, va_f) = if val.is_empty() {
            (tr_e, tr_f)
        } else {
            rmse(model, &params, &val, &mut scratch, val_forces)
        };
        if !va_e.is_finite() {
            return Err(Error::Diverged {
                epoch,
                message: "non-finite validation RMSE".into(),
            });
        }
        if va_e < best_rmse {
            best_rmse = va_e;
            best_epoch = Some(epoch);
            best.params.copy_from_slice(&params);
            stale = 0;
        } else {
            stale += 1;
        }
        history.push(EpochRecord {
            epoch,
            loss: epoch_loss,
            train_rmse_energy: tr_e,
            train_rmse_forces: tr_f,
            val_rmse_energy: va_e,
            val_rmse_forces: va_f,
            best_val_rmse_energy: best_rmse,
        });
        log::debug!("epoch {epoch}: loss {epoch_loss:.3e} train {tr_e:.3e} val {va_e:.3e}");
        if stale >= config.patience {
            break;
        }
    }
    Ok(TrainOutcome {
        model: best,
        history,
        best_epoch,
    })
}
