//! Oracles shared by the integration tests and the acceptance run.

#![allow(dead_code)]

use fedsense::neuralnet::{backward, window_loss, Architecture, ParamVector};
use fedsense::sensing::{one_hot, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_EPS: f64 = 1e-4;

/// |a − b| / max(|a|, |b|), floored so that coordinates whose gradient is
/// numerically zero compare on absolute error instead.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Random {2,2} model with weights in [−1, 1] and a random 5-step window.
pub fn random_case(seed: u64) -> (ParamVector, Window) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arch = Architecture::new(2, 2, 2);
    let values = (0..arch.param_count())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let states: Vec<usize> = (0..6).map(|_| rng.random_range(0..2)).collect();
    let window = Window {
        inputs: states[..5]
            .iter()
            .map(|&s| one_hot(s, 2).unwrap())
            .collect(),
        targets: states[1..].to_vec(),
    };
    (ParamVector::new(arch, values).unwrap(), window)
}

/// Largest relative error between the BPTT gradient and central differences.
pub fn max_relative_error(seed: u64) -> f64 {
    let (params, window) = random_case(seed);
    let analytic = backward(&params, &window).unwrap().gradient;
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus.values_mut()[i] += FD_EPS;
        let mut minus = params.clone();
        minus.values_mut()[i] -= FD_EPS;
        let numeric = (window_loss(&plus, &window).unwrap()
            - window_loss(&minus, &window).unwrap())
            / (2.0 * FD_EPS);
        worst = worst.max(rel_err(analytic.values()[i], numeric));
    }
    worst
}

/// Elementwise mean of equally shaped parameter vectors.
pub fn mean_oracle(all: &[&ParamVector]) -> Vec<f64> {
    let n = all.len() as f64;
    (0..all[0].len())
        .map(|i| all.iter().map(|p| p.values()[i]).sum::<f64>() / n)
        .collect()
}

/// H(p) + D_KL(p ‖ q) with the 0·log 0 = 0 convention.
pub fn entropy_plus_kl(p: &[f64], q: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
    let kl: f64 = p
        .iter()
        .zip(q)
        .filter(|(&x, _)| x > 0.0)
        .map(|(&x, &y)| x * (x / y).ln())
        .sum();
    h + kl
}
