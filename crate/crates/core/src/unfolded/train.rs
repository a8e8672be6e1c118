//! Minibatch ADAM training with early stopping on a validation set.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_update, AdamConfig, AdamState};
use super::backward::uadmm_backward;
use super::forward::{uadmm_apply, uadmm_forward};
use super::loss::training_loss;
use super::model::{ParamGrads, UnfoldedModel};
use crate::error::{Error, Result};
use crate::seeding::rng_for;
use crate::solvers::random_phase_init;
use crate::transforms::{Complex, Measurements, Signal, StftConfig, StftOperator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a new best validation loss before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            batch_size: 10,
            max_epochs: 200,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning_rate must be a finite nonnegative number, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.patience == 0 {
            return Err(Error::Config(
                "batch_size and patience must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A training or evaluation item: ground truth, its measurements, and the
/// operator that produced them.
#[derive(Clone, Debug)]
pub struct Example {
    pub name: String,
    pub reference: Signal,
    pub measurements: Measurements,
    pub op: Arc<StftOperator>,
}

impl Example {
    pub fn new(name: impl Into<String>, reference: Signal, cfg: StftConfig) -> Result<Self> {
        let op = Arc::new(StftOperator::new(cfg, reference.len())?);
        Self::with_operator(name, reference, op)
    }

    pub fn with_operator(
        name: impl Into<String>,
        reference: Signal,
        op: Arc<StftOperator>,
    ) -> Result<Self> {
        let a = op.forward(&reference.samples)?;
        Ok(Example {
            name: name.into(),
            measurements: Measurements {
                r: a.iter().map(|c| c.norm()).collect(),
            },
            reference,
            op,
        })
    }

    /// Random-phase initial estimate, seeded by `(seed, name)`.
    pub fn initial_estimate(&self, seed: u64) -> Result<Signal> {
        let mut rng = rng_for(seed, &self.name);
        random_phase_init(
            &self.op,
            &self.measurements,
            self.reference.sample_rate,
            &mut rng,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Epoch 0 is the untrained model.
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

fn zero_lambda(ex: &Example) -> Vec<Complex> {
    vec![Complex::default(); ex.op.coeff_len()]
}

fn item_loss(model: &UnfoldedModel, ex: &Example, x0: &Signal) -> Result<f64> {
    let (x, _) = uadmm_apply(model, &ex.op, &ex.measurements, x0, &zero_lambda(ex))?;
    Ok(training_loss(&x.samples, &ex.reference.samples)?.0)
}

fn item_gradient(model: &UnfoldedModel, ex: &Example, x0: &Signal) -> Result<(f64, ParamGrads)> {
    let (x, _, tape) = uadmm_forward(model, &ex.op, &ex.measurements, x0, &zero_lambda(ex))?;
    let (loss, grad) = training_loss(&x.samples, &ex.reference.samples)?;
    let grads = uadmm_backward(model, &ex.op, &tape, &grad)?;
    Ok((loss, grads))
}

/// Mean training loss of `model` over `set`, each item starting from its
/// seeded random-phase estimate.
pub fn mean_loss(model: &UnfoldedModel, set: &[Example], seed: u64) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyDataset("loss evaluation"));
    }
    let x0s = initial_estimates(set, seed)?;
    mean_loss_from(model, set, &x0s)
}

fn mean_loss_from(model: &UnfoldedModel, set: &[Example], x0s: &[Signal]) -> Result<f64> {
    let losses: Vec<f64> = set
        .par_iter()
        .zip(x0s.par_iter())
        .map(|(ex, x0)| item_loss(model, ex, x0))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

fn initial_estimates(set: &[Example], seed: u64) -> Result<Vec<Signal>> {
    set.par_iter().map(|ex| ex.initial_estimate(seed)).collect()
}

/// Trains `model` and returns the parameters with the lowest validation
/// loss seen, along with the per-epoch history.
pub fn train(
    model: &UnfoldedModel,
    train_set: &[Example],
    val_set: &[Example],
    cfg: &TrainConfig,
) -> Result<(UnfoldedModel, TrainHistory)> {
    if train_set.is_empty() {
        return Err(Error::EmptyDataset("training set"));
    }
    if val_set.is_empty() {
        return Err(Error::EmptyDataset("validation set"));
    }
    cfg.validate()?;
    model.validate()?;

    let train_x0 = initial_estimates(train_set, cfg.seed)?;
    let val_x0 = initial_estimates(val_set, cfg.seed)?;

    let mut model = model.clone();
    let mut history = TrainHistory::default();
    let train0 = mean_loss_from(&model, train_set, &train_x0)?;
    let val0 = mean_loss_from(&model, val_set, &val_x0)?;
    history.epochs.push(EpochRecord {
        epoch: 0,
        train_loss: train0,
        val_loss: val0,
    });
    log::info!("epoch 0: train {train0:.4} val {val0:.4}");

    let mut best_model = model.clone();
    let mut best_val = val0;
    let mut since_best = 0;
    let adam = AdamConfig::with_learning_rate(cfg.learning_rate);
    let mut state = AdamState::new(model.n_params());
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        let mut shuffle_rng = rng_for(cfg.seed, &format!("shuffle/{epoch}"));
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for (batch_index, batch) in order.chunks(cfg.batch_size).enumerate() {
            let results: Vec<(f64, ParamGrads)> = batch
                .par_iter()
                .map(|&i| item_gradient(&model, &train_set[i], &train_x0[i]))
                .collect::<Result<_>>()?;
            let mut total = ParamGrads::zeros(&model);
            let mut batch_loss = 0.0;
            for (loss, g) in &results {
                batch_loss += loss;
                total.add_scaled(g, 1.0 / results.len() as f64);
            }
            if !batch_loss.is_finite() || total.flat.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_index,
                    loss: batch_loss / results.len() as f64,
                });
            }
            loss_sum += batch_loss;

            let previous_betas: Vec<f64> = model.layers.iter().map(|l| l.beta).collect();
            let mut flat = model.to_flat();
            adam_update(&mut flat, &total.flat, &mut state, &adam)?;
            model.set_flat(&flat)?;
            for (l, prev) in model.layers.iter_mut().zip(previous_betas) {
                l.project_beta(prev);
            }
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let val_loss = mean_loss_from(&model, val_set, &val_x0)?;
        if !val_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                batch: 0,
                loss: val_loss,
            });
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        log::info!("epoch {epoch}: train {train_loss:.4} val {val_loss:.4}");

        if val_loss < best_val {
            best_val = val_loss;
            best_model = model.clone();
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                history.stopped_early = true;
                break;
            }
        }
    }
    Ok((best_model, history))
}
