use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuralnet::ParamVector;

/// A node's aggregate of its own and its neighbors' parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalModel {
    pub owner: u32,
    pub params: ParamVector,
    /// Owner first, then senders in the order they were averaged.
    pub contributors: Vec<u32>,
}

/// How received parameters are folded into the owner's.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationRule {
    /// `Θ = (θ_own + Σ w_l θ_l) / (1 + Σ w_l)`; with unit weights the plain
    /// mean over the node and its neighbors.
    #[default]
    UniformMean,
    /// `Θ = θ_own + (1/M) Σ w_l θ_l` over the `M` received models, taken
    /// literally. Not a convex combination.
    SelfPlusScaledSum,
}

/// Perturbs every parameter with independent `N(0, noise_std²)` noise.
/// `noise_std = 0` returns the input unchanged.
pub fn corrupt(params: &ParamVector, noise_std: f64, seed: u64) -> Result<ParamVector> {
    if !(noise_std.is_finite() && noise_std >= 0.0) {
        return Err(Error::invalid(format!(
            "noise standard deviation must be non-negative, got {noise_std}"
        )));
    }
    if noise_std == 0.0 {
        return Ok(params.clone());
    }
    let normal = Normal::new(0.0, noise_std).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = params
        .values()
        .iter()
        .map(|v| v + normal.sample(&mut rng))
        .collect();
    ParamVector::new(params.arch(), values)
}

/// Uniform average of `own` with the received models (unit weights when
/// `weights` is `None`).
pub fn aggregate_average(
    owner: u32,
    own: &ParamVector,
    received: &[(u32, ParamVector)],
    weights: Option<&[f64]>,
) -> Result<GlobalModel> {
    aggregate(owner, own, received, weights, AggregationRule::UniformMean)
}

pub fn aggregate(
    owner: u32,
    own: &ParamVector,
    received: &[(u32, ParamVector)],
    weights: Option<&[f64]>,
    rule: AggregationRule,
) -> Result<GlobalModel> {
    let arch = own.arch();
    if let Some((id, p)) = received.iter().find(|(_, p)| p.arch() != arch) {
        return Err(Error::ArchitectureMismatch(format!(
            "model from node {id} is {:?}, owner {owner} uses {arch:?}",
            p.arch()
        )));
    }
    let unit;
    let weights = match weights {
        Some(w) => w,
        None => {
            unit = vec![1.0; received.len()];
            &unit
        }
    };
    if weights.len() != received.len() {
        return Err(Error::DimensionMismatch {
            expected: received.len(),
            actual: weights.len(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid(
            "aggregation weights must be finite and non-negative",
        ));
    }

    let mut acc = vec![0.0; own.len()];
    for ((_, p), &w) in received.iter().zip(weights) {
        for (a, v) in acc.iter_mut().zip(p.values()) {
            *a += w * v;
        }
    }
    let values: Vec<f64> = match rule {
        AggregationRule::UniformMean => {
            let denom = 1.0 + weights.iter().sum::<f64>();
            own.values()
                .iter()
                .zip(&acc)
                .map(|(o, a)| (o + a) / denom)
                .collect()
        }
        AggregationRule::SelfPlusScaledSum => {
            let m = received.len().max(1) as f64;
            own.values()
                .iter()
                .zip(&acc)
                .map(|(o, a)| o + a / m)
                .collect()
        }
    };

    let mut contributors = Vec::with_capacity(received.len() + 1);
    contributors.push(owner);
    contributors.extend(received.iter().map(|(id, _)| *id));
    Ok(GlobalModel {
        owner,
        params: ParamVector::new(arch, values)?,
        contributors,
    })
}
