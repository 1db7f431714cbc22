use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the uniform initialization interval.
pub const INIT_RANGE: f64 = 0.1;

/// Gates of an LSTM layer, in the order their rows are stacked.
pub const GATES: usize = 4;

/// Shape of the two-layer LSTM predictor: `input_dim → P → Q → output_dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub p_units: usize,
    pub q_units: usize,
    #[serde(default = "two")]
    pub output_dim: usize,
}

fn two() -> usize {
    2
}

impl Architecture {
    pub const fn new(input_dim: usize, p_units: usize, q_units: usize) -> Self {
        Architecture {
            input_dim,
            p_units,
            q_units,
            output_dim: 2,
        }
    }

    /// The small network, {P, Q} = {5, 5}.
    pub const fn t_s() -> Self {
        Architecture::new(2, 5, 5)
    }

    /// The big network, {P, Q} = {60, 120}.
    pub const fn t_b() -> Self {
        Architecture::new(2, 60, 120)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.p_units == 0 || self.q_units == 0 || self.output_dim == 0 {
            return Err(Error::ArchitectureMismatch(format!(
                "all dimensions must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// `4(P(m+P)+P) + 4(Q(P+Q)+Q) + (out·Q + out)`.
    pub fn param_count(&self) -> usize {
        let (m, p, q, o) = (self.input_dim, self.p_units, self.q_units, self.output_dim);
        GATES * (p * (m + p) + p) + GATES * (q * (p + q) + q) + (o * q + o)
    }

    pub fn layout(&self) -> ParamLayout {
        let l1 = LayerLayout::new(0, self.p_units, self.input_dim);
        let l2 = LayerLayout::new(l1.end(), self.q_units, self.p_units);
        let dense_w = l2.end()..l2.end() + self.output_dim * self.q_units;
        let dense_b = dense_w.end..dense_w.end + self.output_dim;
        ParamLayout {
            layers: [l1, l2],
            dense_w,
            dense_b,
        }
    }
}

/// Offsets of one LSTM layer inside the flat vector. The weight block is
/// `4·units` rows of `units + inputs` columns, row-major; rows are grouped by
/// gate (forget, input, candidate, output) and columns are `[h_prev, x]`.
/// The `4·units` biases follow in the same gate order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerLayout {
    pub units: usize,
    pub inputs: usize,
    pub weights: Range<usize>,
    pub biases: Range<usize>,
}

impl LayerLayout {
    fn new(start: usize, units: usize, inputs: usize) -> Self {
        let weights = start..start + GATES * units * (units + inputs);
        let biases = weights.end..weights.end + GATES * units;
        LayerLayout {
            units,
            inputs,
            weights,
            biases,
        }
    }

    pub fn end(&self) -> usize {
        self.biases.end
    }

    pub fn cols(&self) -> usize {
        self.units + self.inputs
    }

    pub fn range(&self) -> Range<usize> {
        self.weights.start..self.biases.end
    }
}

/// Where each tensor lives in a [`ParamVector`]: layer 1, layer 2, then the
/// dense head (`out × Q` row-major weights, then `out` biases).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub layers: [LayerLayout; 2],
    pub dense_w: Range<usize>,
    pub dense_b: Range<usize>,
}

impl ParamLayout {
    pub fn total(&self) -> usize {
        self.dense_b.end
    }
}

/// Flattened model parameters for one architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    arch: Architecture,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(arch: Architecture, values: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if values.len() != arch.param_count() {
            return Err(Error::DimensionMismatch {
                expected: arch.param_count(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("parameters must be finite"));
        }
        Ok(ParamVector { arch, values })
    }

    pub fn zeros(arch: Architecture) -> Self {
        ParamVector {
            arch,
            values: vec![0.0; arch.param_count()],
        }
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Uniform `[-0.1, 0.1]` initialization, reproducible from `seed`.
pub fn init_params(arch: Architecture, seed: u64) -> Result<ParamVector> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..arch.param_count())
        .map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE))
        .collect();
    Ok(ParamVector { arch, values })
}
