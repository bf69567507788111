use super::{Example, HarnessError};
use crate::autodiff::{AdamConfig, AdamState, AutodiffError, Tape, Tensor};
use crate::models::{forward, logits, predict, Architecture, ModelConfig, ModelError, ModelParams};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Seeds weight initialization and per-epoch shuffling.
    pub seed: u64,
    /// Also measure training accuracy each epoch and stop once it reaches 100%.
    pub stop_at_perfect_train: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 100,
            batch_size: 32,
            adam: AdamConfig::default(),
            seed: 0,
            stop_at_perfect_train: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_accuracy: f64,
    pub train_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub architecture: Architecture,
    pub fold: Option<usize>,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose snapshot was kept: the earliest with the best validation accuracy.
    pub chosen_epoch: usize,
    pub validation_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub wall_time_secs: f64,
}

/// A finished run and its selected parameters.
#[derive(Debug, Clone)]
pub struct Trained {
    pub record: RunRecord,
    pub params: ModelParams,
}

fn model_err(e: ModelError, epoch: usize) -> HarnessError {
    match e {
        ModelError::Autodiff(AutodiffError::NonFinite(op)) => HarnessError::Divergence {
            epoch,
            reason: format!("non-finite value in {op}"),
        },
        other => HarnessError::Model(other),
    }
}

/// Mean-loss gradient contribution of one example: `(loss, dL/dW per weight)`.
fn example_gradients(
    model: &ModelConfig,
    params: &ModelParams,
    ex: &Example,
) -> Result<(f64, Vec<Tensor>), ModelError> {
    let mut tape = Tape::new();
    let bound = params.record(&mut tape, true)?;
    let out = forward(&mut tape, model, &bound, &ex.x)?;
    let loss = tape.softmax_cross_entropy(out.logits, ex.label)?;
    let mut grads = tape.backward(loss)?;
    let per_param = bound
        .ids()
        .iter()
        .zip(params.tensors())
        .map(|(&id, p)| grads.take(id).unwrap_or_else(|| Tensor::zeros(p.shape())))
        .collect();
    Ok((tape.value(loss).item(), per_param))
}

/// Predicted class per example.
pub fn predictions(
    model: &ModelConfig,
    params: &ModelParams,
    examples: &[&Example],
) -> Result<Vec<usize>, ModelError> {
    examples
        .par_iter()
        .map(|ex| logits(model, params, &ex.x).map(|z| predict(&z)))
        .collect()
}

/// Fraction of examples classified correctly; 0 for an empty set.
pub fn accuracy(model: &ModelConfig, params: &ModelParams, examples: &[&Example]) -> Result<f64, ModelError> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let preds = predictions(model, params, examples)?;
    let correct = preds.iter().zip(examples).filter(|(p, ex)| **p == ex.label).count();
    Ok(correct as f64 / examples.len() as f64)
}

/// Mini-batch Adam on mean cross-entropy with retrospective early stopping:
/// the returned parameters are the snapshot with the best validation
/// accuracy (earliest on ties).
///
/// Per-example gradients may be computed in parallel but are summed in batch
/// order, so results do not depend on the thread count.
pub fn train(
    model: &ModelConfig,
    train_set: &[&Example],
    validation: &[&Example],
    config: &TrainConfig,
) -> Result<Trained, HarnessError> {
    if config.max_epochs == 0 || config.batch_size == 0 {
        return Err(HarnessError::InvalidConfig(
            "max epochs and batch size must be at least 1".into(),
        ));
    }
    if train_set.is_empty() {
        return Err(HarnessError::InvalidConfig("empty training set".into()));
    }
    if let Some(ex) = train_set.iter().chain(validation).find(|ex| ex.label >= model.classes) {
        return Err(HarnessError::InvalidConfig(format!(
            "label {} out of range for {} classes",
            ex.label, model.classes
        )));
    }
    let started = Instant::now();
    let mut params = ModelParams::init(model, config.seed)?;
    let mut adam = AdamState::new(config.adam, params.tensors());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5eed_5eed_5eed);

    let mut best = params.clone();
    let mut best_acc = f64::NEG_INFINITY;
    let mut chosen_epoch = 0;
    let mut epochs = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let results: Vec<_> = batch
                .par_iter()
                .map(|&i| example_gradients(model, &params, train_set[i]))
                .collect();
            let scale = 1.0 / batch.len() as f64;
            let mut total: Vec<Tensor> = params.tensors().iter().map(|p| Tensor::zeros(p.shape())).collect();
            for r in results {
                let (loss, grads) = r.map_err(|e| model_err(e, epoch))?;
                if !loss.is_finite() {
                    return Err(HarnessError::Divergence {
                        epoch,
                        reason: "loss is not finite".into(),
                    });
                }
                loss_sum += loss;
                for (t, g) in total.iter_mut().zip(&grads) {
                    for (a, b) in t.data_mut().iter_mut().zip(g.data()) {
                        *a += scale * b;
                    }
                }
            }
            adam.step(params.tensors_mut(), &total);
            if params.tensors().iter().any(|t| !t.is_finite()) {
                return Err(HarnessError::Divergence {
                    epoch,
                    reason: "parameters are not finite".into(),
                });
            }
        }

        let validation_accuracy = accuracy(model, &params, validation).map_err(|e| model_err(e, epoch))?;
        let train_accuracy = if config.stop_at_perfect_train {
            Some(accuracy(model, &params, train_set).map_err(|e| model_err(e, epoch))?)
        } else {
            None
        };
        epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            validation_accuracy,
            train_accuracy,
        });
        if validation_accuracy > best_acc {
            best_acc = validation_accuracy;
            best = params.clone();
            chosen_epoch = epoch;
        }
        if train_accuracy == Some(1.0) {
            break;
        }
    }

    Ok(Trained {
        record: RunRecord {
            architecture: model.architecture,
            fold: None,
            seed: config.seed,
            epochs,
            chosen_epoch,
            validation_accuracy: best_acc,
            test_accuracy: None,
            wall_time_secs: started.elapsed().as_secs_f64(),
        },
        params: best,
    })
}
