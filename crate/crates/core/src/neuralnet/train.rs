use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::arch::ParamVector;
use super::lstm::{backward, forward, predict, PROB_FLOOR};
use crate::error::{Error, Result};
use crate::sensing::Dataset;

/// Default step size for the small network. At 0.05 plain SGD from a
/// ±0.1 init stays on the predict-idle plateau for 30+ epochs on sparse
/// traces; 0.3 is the smallest rate that leaves it within 20.
pub const LR_SMALL: f64 = 0.3;
/// Default step size for the big network.
pub const LR_BIG: f64 = 0.01;
/// Global gradient-norm ceiling.
pub const DEFAULT_CLIP_NORM: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Rescale the gradient when its L2 norm exceeds this; `None` disables.
    pub clip_norm: Option<f64>,
    /// Seeds the per-epoch window shuffle.
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(epochs: usize, learning_rate: f64, seed: u64) -> Self {
        TrainConfig {
            epochs,
            learning_rate,
            clip_norm: Some(DEFAULT_CLIP_NORM),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean per-step cross-entropy over the epoch.
    pub loss: f64,
    /// Accuracy of the pre-update predictions made during the epoch.
    pub train_acc: f64,
    pub val_acc: Option<f64>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ParamVector,
    pub metrics: Vec<EpochMetrics>,
}

/// Loss and accuracy of a model over a whole dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

/// Plain SGD with one update per window and the window order reshuffled
/// every epoch. Deterministic given `config.seed`.
pub fn train(
    params: &ParamVector,
    dataset: &Dataset,
    validation: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if dataset.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(Error::invalid(format!(
            "learning rate must be positive, got {}",
            config.learning_rate
        )));
    }
    if dataset.m != params.arch().input_dim {
        return Err(Error::DimensionMismatch {
            expected: params.arch().input_dim,
            actual: dataset.m,
        });
    }

    let mut params = params.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut metrics = Vec::with_capacity(config.epochs);
    let steps = dataset.num_targets() as f64;

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;

        for &w in &order {
            let window = &dataset.windows[w];
            let bp = backward(&params, window)?;
            if !bp.loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            loss_sum += bp.loss * window.len() as f64;
            correct += bp.correct;

            let mut scale = config.learning_rate;
            if let Some(max_norm) = config.clip_norm {
                let norm = bp.gradient.norm();
                if norm > max_norm {
                    scale *= max_norm / norm;
                }
            }
            for (p, g) in params.values_mut().iter_mut().zip(bp.gradient.values()) {
                *p -= scale * g;
            }
        }
        if !params.is_finite() {
            return Err(Error::Diverged { epoch });
        }

        let val_acc = validation
            .map(|v| evaluate(&params, v).map(|e| e.accuracy))
            .transpose()?;
        metrics.push(EpochMetrics {
            epoch,
            loss: loss_sum / steps,
            train_acc: correct as f64 / steps,
            val_acc,
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(TrainOutcome { params, metrics })
}

/// Mean per-step loss and accuracy over every window of `dataset`.
pub fn evaluate(params: &ParamVector, dataset: &Dataset) -> Result<Evaluation> {
    if dataset.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for window in &dataset.windows {
        let out = forward(params, &window.inputs)?;
        for (z, &t) in out.logits.iter().zip(&window.targets) {
            let probs = super::lstm::softmax(z)?;
            loss -= probs[t].max(PROB_FLOOR).ln();
            if super::lstm::argmax(&probs) == t {
                correct += 1;
            }
        }
    }
    let n = dataset.num_targets() as f64;
    Ok(Evaluation {
        loss: loss / n,
        accuracy: correct as f64 / n,
    })
}

/// Predictions for every window of `dataset`, concatenated in window order.
pub fn predict_dataset(params: &ParamVector, dataset: &Dataset) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(dataset.num_targets());
    for window in &dataset.windows {
        out.extend(predict(params, &window.inputs)?);
    }
    Ok(out)
}
