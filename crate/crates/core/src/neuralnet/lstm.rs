//! Forward pass, loss, and backpropagation through time for the two-layer
//! LSTM with a dense softmax head.

use super::arch::{LayerLayout, ParamVector, GATES};
use crate::error::{Error, Result};
use crate::sensing::Window;

/// Lower bound applied to the target probability before taking its log.
pub const PROB_FLOOR: f64 = 1e-12;

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Hidden and cell state of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LayerState {
    pub fn zeros(units: usize) -> Self {
        LayerState {
            h: vec![0.0; units],
            c: vec![0.0; units],
        }
    }
}

/// Recurrent state of both layers (P units, then Q units).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub layers: [LayerState; 2],
}

/// Borrowed weights of one LSTM layer.
#[derive(Debug, Clone, Copy)]
pub struct LstmLayer<'a> {
    units: usize,
    inputs: usize,
    weights: &'a [f64],
    biases: &'a [f64],
}

/// Gate activations of one step, kept for the backward pass.
#[derive(Debug, Clone)]
struct StepCache {
    /// `[h_prev, x]`
    concat: Vec<f64>,
    c_prev: Vec<f64>,
    f: Vec<f64>,
    i: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl<'a> LstmLayer<'a> {
    pub fn from_params(params: &'a ParamVector, layer: usize) -> Self {
        let layout = &params.arch().layout().layers[layer];
        LstmLayer::from_layout(params.values(), layout)
    }

    fn from_layout(values: &'a [f64], layout: &LayerLayout) -> Self {
        LstmLayer {
            units: layout.units,
            inputs: layout.inputs,
            weights: &values[layout.weights.clone()],
            biases: &values[layout.biases.clone()],
        }
    }

    /// Builds a layer over raw slices: `weights` is `4·units × (units + inputs)`
    /// row-major with gate order forget, input, candidate, output.
    pub fn new(units: usize, inputs: usize, weights: &'a [f64], biases: &'a [f64]) -> Result<Self> {
        let expected = GATES * units * (units + inputs);
        if weights.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: weights.len(),
            });
        }
        if biases.len() != GATES * units {
            return Err(Error::DimensionMismatch {
                expected: GATES * units,
                actual: biases.len(),
            });
        }
        Ok(LstmLayer {
            units,
            inputs,
            weights,
            biases,
        })
    }

    pub fn units(&self) -> usize {
        self.units
    }

    /// One recurrence step:
    /// `c = f⊙c_prev + i⊙g`, `h = o⊙tanh(c)`.
    pub fn step(&self, x: &[f64], prev: &LayerState) -> Result<LayerState> {
        if x.len() != self.inputs {
            return Err(Error::DimensionMismatch {
                expected: self.inputs,
                actual: x.len(),
            });
        }
        if prev.h.len() != self.units || prev.c.len() != self.units {
            return Err(Error::DimensionMismatch {
                expected: self.units,
                actual: prev.h.len().max(prev.c.len()),
            });
        }
        let cache = self.step_cached(x, prev);
        let h = cache
            .o
            .iter()
            .zip(&cache.tanh_c)
            .map(|(o, t)| o * t)
            .collect();
        let c = self.cell(&cache);
        Ok(LayerState { h, c })
    }

    fn cell(&self, cache: &StepCache) -> Vec<f64> {
        (0..self.units)
            .map(|k| cache.f[k] * cache.c_prev[k] + cache.i[k] * cache.g[k])
            .collect()
    }

    fn step_cached(&self, x: &[f64], prev: &LayerState) -> StepCache {
        let n = self.units;
        let cols = n + self.inputs;
        let mut concat = Vec::with_capacity(cols);
        concat.extend_from_slice(&prev.h);
        concat.extend_from_slice(x);

        let mut pre = self.biases.to_vec();
        for (row, z) in pre.iter_mut().enumerate() {
            let w = &self.weights[row * cols..(row + 1) * cols];
            *z += w.iter().zip(&concat).map(|(a, b)| a * b).sum::<f64>();
        }
        let f: Vec<f64> = pre[0..n].iter().map(|&z| sigmoid(z)).collect();
        let i: Vec<f64> = pre[n..2 * n].iter().map(|&z| sigmoid(z)).collect();
        let g: Vec<f64> = pre[2 * n..3 * n].iter().map(|&z| z.tanh()).collect();
        let o: Vec<f64> = pre[3 * n..4 * n].iter().map(|&z| sigmoid(z)).collect();
        let tanh_c = (0..n)
            .map(|k| (f[k] * prev.c[k] + i[k] * g[k]).tanh())
            .collect();
        StepCache {
            concat,
            c_prev: prev.c.clone(),
            f,
            i,
            g,
            o,
            tanh_c,
        }
    }
}

/// Standalone cell step over a flat layer slice (`weights` then `biases`).
pub fn lstm_cell_step(
    layer_params: &[f64],
    units: usize,
    x: &[f64],
    prev: &LayerState,
) -> Result<LayerState> {
    let inputs = x.len();
    let w_len = GATES * units * (units + inputs);
    if layer_params.len() != w_len + GATES * units {
        return Err(Error::DimensionMismatch {
            expected: w_len + GATES * units,
            actual: layer_params.len(),
        });
    }
    let (weights, biases) = layer_params.split_at(w_len);
    LstmLayer::new(units, inputs, weights, biases)?.step(x, prev)
}

/// Logits of every step plus the state after the last step.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub logits: Vec<Vec<f64>>,
    pub state: LstmState,
}

fn check_window(params: &ParamVector, inputs: &[Vec<f64>]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::invalid("window must not be empty"));
    }
    let m = params.arch().input_dim;
    if let Some(x) = inputs.iter().find(|x| x.len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: x.len(),
        });
    }
    Ok(())
}

struct Tape {
    caches: [Vec<StepCache>; 2],
    hidden2: Vec<Vec<f64>>,
    logits: Vec<Vec<f64>>,
    state: LstmState,
}

fn dense(params: &ParamVector, h: &[f64]) -> Vec<f64> {
    let arch = params.arch();
    let layout = arch.layout();
    let w = &params.values()[layout.dense_w];
    let b = &params.values()[layout.dense_b];
    let q = arch.q_units;
    (0..arch.output_dim)
        .map(|r| {
            b[r] + w[r * q..(r + 1) * q]
                .iter()
                .zip(h)
                .map(|(a, x)| a * x)
                .sum::<f64>()
        })
        .collect()
}

fn run_tape(params: &ParamVector, inputs: &[Vec<f64>]) -> Tape {
    let arch = params.arch();
    let layer1 = LstmLayer::from_params(params, 0);
    let layer2 = LstmLayer::from_params(params, 1);
    let mut s1 = LayerState::zeros(arch.p_units);
    let mut s2 = LayerState::zeros(arch.q_units);
    let steps = inputs.len();
    let mut tape = Tape {
        caches: [Vec::with_capacity(steps), Vec::with_capacity(steps)],
        hidden2: Vec::with_capacity(steps),
        logits: Vec::with_capacity(steps),
        state: LstmState {
            layers: [LayerState::zeros(0), LayerState::zeros(0)],
        },
    };
    for x in inputs {
        let c1 = layer1.step_cached(x, &s1);
        s1 = LayerState {
            h: c1.o.iter().zip(&c1.tanh_c).map(|(o, t)| o * t).collect(),
            c: layer1.cell(&c1),
        };
        let c2 = layer2.step_cached(&s1.h, &s2);
        s2 = LayerState {
            h: c2.o.iter().zip(&c2.tanh_c).map(|(o, t)| o * t).collect(),
            c: layer2.cell(&c2),
        };
        tape.logits.push(dense(params, &s2.h));
        tape.hidden2.push(s2.h.clone());
        tape.caches[0].push(c1);
        tape.caches[1].push(c2);
    }
    tape.state = LstmState { layers: [s1, s2] };
    tape
}

/// Runs both layers and the dense head over `inputs`, starting from zero
/// state.
pub fn forward(params: &ParamVector, inputs: &[Vec<f64>]) -> Result<ForwardOutput> {
    check_window(params, inputs)?;
    let tape = run_tape(params, inputs);
    Ok(ForwardOutput {
        logits: tape.logits,
        state: tape.state,
    })
}

/// Numerically stable softmax.
pub fn softmax(x: &[f64]) -> Result<Vec<f64>> {
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("softmax input contains NaN"));
    }
    Ok(softmax_unchecked(x))
}

fn softmax_unchecked(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `−ln p̂[target]` with the probability floored at [`PROB_FLOOR`]. With a
/// one-hot target the entropy term vanishes and the KL term is all that is
/// left.
pub fn cross_entropy(pred: &[f64], target: usize) -> Result<f64> {
    if target >= pred.len() {
        return Err(Error::invalid(format!(
            "target {target} out of range for {} classes",
            pred.len()
        )));
    }
    let sum: f64 = pred.iter().sum();
    if pred.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(
            "prediction is not a probability mass function",
        ));
    }
    Ok(-pred[target].max(PROB_FLOOR).ln())
}

/// Index of the largest entry; ties go to the lowest index (idle).
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = k;
        }
    }
    best
}

/// Most likely next state at every step of the window.
pub fn predict(params: &ParamVector, inputs: &[Vec<f64>]) -> Result<Vec<usize>> {
    let out = forward(params, inputs)?;
    Ok(out
        .logits
        .iter()
        .map(|z| argmax(&softmax_unchecked(z)))
        .collect())
}

fn check_targets(params: &ParamVector, window: &Window) -> Result<()> {
    check_window(params, &window.inputs)?;
    if window.targets.len() != window.inputs.len() {
        return Err(Error::DimensionMismatch {
            expected: window.inputs.len(),
            actual: window.targets.len(),
        });
    }
    let classes = params.arch().output_dim;
    if let Some(t) = window.targets.iter().find(|&&t| t >= classes) {
        return Err(Error::invalid(format!("target {t} out of range")));
    }
    Ok(())
}

/// Mean cross-entropy over the steps of a window.
pub fn window_loss(params: &ParamVector, window: &Window) -> Result<f64> {
    check_targets(params, window)?;
    let tape = run_tape(params, &window.inputs);
    Ok(mean_loss(&tape.logits, &window.targets))
}

fn mean_loss(logits: &[Vec<f64>], targets: &[usize]) -> f64 {
    let total: f64 = logits
        .iter()
        .zip(targets)
        .map(|(z, &t)| -softmax_unchecked(z)[t].max(PROB_FLOOR).ln())
        .sum();
    total / targets.len() as f64
}

/// Loss, number of correct argmax predictions, and gradient of the loss for
/// one window.
#[derive(Debug, Clone)]
pub struct Backprop {
    pub loss: f64,
    pub correct: usize,
    pub gradient: ParamVector,
}

/// Gradient of the mean window cross-entropy with respect to every
/// parameter, by backpropagation through time over the whole window.
pub fn backward(params: &ParamVector, window: &Window) -> Result<Backprop> {
    check_targets(params, window)?;
    let arch = params.arch();
    let layout = arch.layout();
    let steps = window.len();
    let tape = run_tape(params, &window.inputs);

    let mut grad = vec![0.0; arch.param_count()];
    let scale = 1.0 / steps as f64;
    let q = arch.q_units;
    let out_dim = arch.output_dim;
    let dense_w = &params.values()[layout.dense_w.clone()];

    let mut loss = 0.0;
    let mut correct = 0;
    // gradient flowing into layer-2 hidden outputs from the dense head
    let mut dh_out: Vec<Vec<f64>> = Vec::with_capacity(steps);
    for t in 0..steps {
        let probs = softmax_unchecked(&tape.logits[t]);
        let target = window.targets[t];
        loss -= probs[target].max(PROB_FLOOR).ln();
        if argmax(&probs) == target {
            correct += 1;
        }
        let h2 = &tape.hidden2[t];
        let mut dh = vec![0.0; q];
        for r in 0..out_dim {
            let dz = (probs[r] - if r == target { 1.0 } else { 0.0 }) * scale;
            grad[layout.dense_b.start + r] += dz;
            let row = layout.dense_w.start + r * q;
            for k in 0..q {
                grad[row + k] += dz * h2[k];
                dh[k] += dz * dense_w[r * q + k];
            }
        }
        dh_out.push(dh);
    }

    let dh1_out = backprop_layer(
        params,
        &layout.layers[1],
        &tape.caches[1],
        &dh_out,
        &mut grad,
    );
    backprop_layer(
        params,
        &layout.layers[0],
        &tape.caches[0],
        &dh1_out,
        &mut grad,
    );

    Ok(Backprop {
        loss: loss / steps as f64,
        correct,
        gradient: ParamVector::new(arch, grad)?,
    })
}

/// BPTT through one layer. `dh_out[t]` is the gradient reaching `h_t` from
/// above; returns the gradient with respect to each step's input.
fn backprop_layer(
    params: &ParamVector,
    layout: &LayerLayout,
    caches: &[StepCache],
    dh_out: &[Vec<f64>],
    grad: &mut [f64],
) -> Vec<Vec<f64>> {
    let n = layout.units;
    let cols = layout.cols();
    let weights = &params.values()[layout.weights.clone()];
    let mut dh_next = vec![0.0; n];
    let mut dc_next = vec![0.0; n];
    let mut dx_all = vec![Vec::new(); caches.len()];
    let mut da = vec![0.0; GATES * n];

    for t in (0..caches.len()).rev() {
        let cache = &caches[t];
        for k in 0..n {
            let dh = dh_out[t][k] + dh_next[k];
            let tc = cache.tanh_c[k];
            let dc = dc_next[k] + dh * cache.o[k] * (1.0 - tc * tc);
            let (f, i, g, o) = (cache.f[k], cache.i[k], cache.g[k], cache.o[k]);
            da[k] = dc * cache.c_prev[k] * f * (1.0 - f);
            da[n + k] = dc * g * i * (1.0 - i);
            da[2 * n + k] = dc * i * (1.0 - g * g);
            da[3 * n + k] = dh * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }

        let mut dconcat = vec![0.0; cols];
        for (row, &d) in da.iter().enumerate() {
            grad[layout.biases.start + row] += d;
            if d == 0.0 {
                continue;
            }
            let w = &weights[row * cols..(row + 1) * cols];
            let gw = &mut grad
                [layout.weights.start + row * cols..layout.weights.start + (row + 1) * cols];
            for j in 0..cols {
                gw[j] += d * cache.concat[j];
                dconcat[j] += d * w[j];
            }
        }
        dh_next.copy_from_slice(&dconcat[..n]);
        dx_all[t] = dconcat[n..].to_vec();
    }
    dx_all
}
