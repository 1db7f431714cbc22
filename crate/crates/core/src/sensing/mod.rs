//! Slot-level channel sensing and next-slot prediction datasets.

mod trace_file;

pub use trace_file::{read_packed, read_text, write_packed, write_text, TRACE_MAGIC};

pub use crate::scenario::split_validation;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traffic::BusyIntervalSet;

/// Default sensing slot: one DIFS slot of 20 µs.
pub const DEFAULT_DELTA: f64 = 20e-6;
/// Default slots per training window.
pub const DEFAULT_WINDOW_LEN: usize = 100;
/// Channel states: idle and busy.
pub const NUM_STATES: usize = 2;

/// Binary busy/idle series, one entry per slot of `delta` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTrace {
    pub slots: Vec<u8>,
    pub delta: f64,
    pub channel_id: u32,
}

impl ChannelTrace {
    pub fn new(slots: Vec<u8>, delta: f64, channel_id: u32) -> Result<Self> {
        if let Some(bad) = slots.iter().find(|&&s| s > 1) {
            return Err(Error::invalid(format!("slot value {bad} is not binary")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::invalid(format!(
                "slot duration {delta} must be positive"
            )));
        }
        Ok(ChannelTrace {
            slots,
            delta,
            channel_id,
        })
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn busy_fraction(&self) -> f64 {
        if self.slots.is_empty() {
            return 0.0;
        }
        self.slots.iter().map(|&s| f64::from(s)).sum::<f64>() / self.slots.len() as f64
    }
}

/// Number of whole slots of `delta` in `horizon`, tolerant to the rounding of
/// e.g. `5.0 / 20e-6`.
pub fn slot_count(horizon: f64, delta: f64) -> usize {
    let ratio = horizon / delta;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.floor() as usize
    }
}

/// Rasterizes continuous occupancy: slot `k` is busy iff some busy interval
/// overlaps `[k·delta, (k+1)·delta)` with nonzero length.
pub fn sense(busy: &BusyIntervalSet, delta: f64, channel_id: u32) -> Result<ChannelTrace> {
    let horizon = busy.horizon();
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(format!(
            "slot duration {delta} must be positive"
        )));
    }
    if delta >= horizon {
        return Err(Error::invalid(format!(
            "slot duration {delta} must be shorter than the horizon {horizon}"
        )));
    }
    let n = slot_count(horizon, delta);
    let mut slots = vec![0u8; n];
    let overlaps = |k: usize, s: f64, e: f64| s < (k + 1) as f64 * delta && e > k as f64 * delta;

    for &(s, e) in busy.intervals() {
        if n == 0 {
            break;
        }
        // candidate range from division, then widened by one and filtered
        // with the exact overlap test
        let first = ((s / delta).floor() as usize).saturating_sub(1);
        let last = ((e / delta).ceil() as usize + 1).min(n);
        for (k, slot) in slots.iter_mut().enumerate().take(last).skip(first) {
            if overlaps(k, s, e) {
                *slot = 1;
            }
        }
    }
    ChannelTrace::new(slots, delta, channel_id)
}

/// One-of-`m` encoding of a channel state; also a point-mass PMF.
pub fn one_hot(state: usize, m: usize) -> Result<Vec<f64>> {
    if state >= m {
        return Err(Error::invalid(format!(
            "state {state} out of range for m = {m}"
        )));
    }
    let mut v = vec![0.0; m];
    v[state] = 1.0;
    Ok(v)
}

/// One training sequence: `inputs[t]` is the one-hot state of slot `t` and
/// `targets[t]` the raw state of slot `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<usize>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub windows: Vec<Window>,
    pub window_len: usize,
    pub m: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Total number of predicted slots.
    pub fn num_targets(&self) -> usize {
        self.windows.iter().map(Window::len).sum()
    }

    /// All targets in window order.
    pub fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.windows.iter().flat_map(|w| w.targets.iter().copied())
    }
}

/// Cuts `trace` into non-overlapping windows of `window_len` slots, each
/// paired with its next-slot targets. Yields `floor((len − 1) / window_len)`
/// windows.
pub fn build_dataset(trace: &ChannelTrace, window_len: usize) -> Result<Dataset> {
    if window_len == 0 {
        return Err(Error::invalid("window length must be positive"));
    }
    if trace.len() <= window_len + 1 {
        return Err(Error::TraceTooShort {
            needed: window_len + 1,
            actual: trace.len(),
        });
    }
    let count = (trace.len() - 1) / window_len;
    let slots = &trace.slots;
    let windows = (0..count)
        .map(|w| {
            let start = w * window_len;
            let inputs = slots[start..start + window_len]
                .iter()
                .map(|&s| one_hot(usize::from(s), NUM_STATES))
                .collect::<Result<Vec<_>>>()?;
            let targets = slots[start + 1..start + window_len + 1]
                .iter()
                .map(|&s| usize::from(s))
                .collect();
            Ok(Window { inputs, targets })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        windows,
        window_len,
        m: NUM_STATES,
    })
}
