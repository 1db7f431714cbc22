//! Synthetic channel occupancy from superposed Poisson packet arrivals.
//!
//! Every rate in an [`ArrivalProcess`] is an independent homogeneous Poisson
//! process. Component `k` of a process draws from its own ChaCha stream `k`
//! under the caller's seed, so a process sampled as a whole is exactly the
//! merge of its components sampled one at a time.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest packet on air, payload plus 52 bytes of MAC/IP headers.
pub const DEFAULT_PKT_LEN_MIN: u32 = 2000;
/// Longest packet on air (2312-byte maximum payload plus headers).
pub const DEFAULT_PKT_LEN_MAX: u32 = 2364;
/// 24 Mbit/s turns a 2312-byte packet into roughly 771 µs of airtime.
pub const DEFAULT_PHY_RATE: f64 = 24.0e6;

/// One traffic component: a set of Poisson arrival rates sharing a
/// packet-length law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalProcess {
    /// Mean arrivals per second, one independent process per entry.
    pub rates: Vec<f64>,
    /// Bytes.
    #[serde(default = "default_pkt_len_min")]
    pub pkt_len_min: u32,
    /// Bytes.
    #[serde(default = "default_pkt_len_max")]
    pub pkt_len_max: u32,
    /// Bits per second used to turn packet length into airtime.
    #[serde(default = "default_phy_rate")]
    pub phy_rate: f64,
    pub source_id: String,
}

fn default_pkt_len_min() -> u32 {
    DEFAULT_PKT_LEN_MIN
}

fn default_pkt_len_max() -> u32 {
    DEFAULT_PKT_LEN_MAX
}

fn default_phy_rate() -> f64 {
    DEFAULT_PHY_RATE
}

impl ArrivalProcess {
    pub fn new(source_id: impl Into<String>, rates: Vec<f64>) -> Self {
        ArrivalProcess {
            rates,
            pkt_len_min: DEFAULT_PKT_LEN_MIN,
            pkt_len_max: DEFAULT_PKT_LEN_MAX,
            phy_rate: DEFAULT_PHY_RATE,
            source_id: source_id.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::invalid(format!(
                "{}: arrival rate {r} must be finite and non-negative",
                self.source_id
            )));
        }
        if self.pkt_len_min > self.pkt_len_max {
            return Err(Error::invalid(format!(
                "{}: pkt_len_min {} exceeds pkt_len_max {}",
                self.source_id, self.pkt_len_min, self.pkt_len_max
            )));
        }
        if !(self.phy_rate.is_finite() && self.phy_rate > 0.0) {
            return Err(Error::invalid(format!(
                "{}: phy_rate must be positive",
                self.source_id
            )));
        }
        Ok(())
    }

    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// Airtime of a packet of `bytes` bytes, in seconds.
    pub fn airtime(&self, bytes: u32) -> f64 {
        f64::from(bytes) * 8.0 / self.phy_rate
    }

    /// Expected airtime under the uniform length law.
    pub fn mean_airtime(&self) -> f64 {
        let mean_bytes = (f64::from(self.pkt_len_min) + f64::from(self.pkt_len_max)) / 2.0;
        mean_bytes * 8.0 / self.phy_rate
    }

    /// Stationary probability that at least one packet of this process is on
    /// air (M/G/∞ occupancy).
    pub fn busy_probability(&self) -> f64 {
        1.0 - (-self.total_rate() * self.mean_airtime()).exp()
    }
}

/// A single transmission on the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    /// Seconds from the start of the trace.
    pub arrival: f64,
    /// Seconds.
    pub airtime: f64,
}

impl Packet {
    pub fn end(&self) -> f64 {
        self.arrival + self.airtime
    }
}

/// Samples component `index` of `proc` (the rate `proc.rates[index]`) on
/// `[0, horizon)`.
pub fn sample_component(
    proc: &ArrivalProcess,
    index: usize,
    horizon: f64,
    seed: u64,
) -> Result<Vec<Packet>> {
    check_horizon(horizon)?;
    proc.validate()?;
    let rate = *proc.rates.get(index).ok_or_else(|| {
        Error::invalid(format!(
            "{}: component {index} out of range ({} rates)",
            proc.source_id,
            proc.rates.len()
        ))
    })?;
    if rate == 0.0 {
        return Ok(Vec::new());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let gaps = Exp::new(rate).map_err(|e| Error::invalid(e.to_string()))?;

    let mut packets = Vec::with_capacity((rate * horizon * 1.2) as usize + 4);
    let mut t = gaps.sample(&mut rng);
    while t < horizon {
        let bytes = rng.random_range(proc.pkt_len_min..=proc.pkt_len_max);
        packets.push(Packet {
            arrival: t,
            airtime: proc.airtime(bytes),
        });
        t += gaps.sample(&mut rng);
    }
    Ok(packets)
}

/// Samples every rate of `proc` and merges them in arrival order.
pub fn sample_arrivals(proc: &ArrivalProcess, horizon: f64, seed: u64) -> Result<Vec<Packet>> {
    check_horizon(horizon)?;
    proc.validate()?;
    let mut all = Vec::new();
    for index in 0..proc.rates.len() {
        all.extend(sample_component(proc, index, horizon, seed)?);
    }
    all.sort_by(|a, b| a.arrival.total_cmp(&b.arrival));
    Ok(all)
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "horizon must be positive, got {horizon}"
        )))
    }
}

/// Continuous-time channel occupancy: sorted, disjoint busy intervals inside
/// `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusyIntervalSet {
    intervals: Vec<(f64, f64)>,
    horizon: f64,
}

impl BusyIntervalSet {
    pub fn empty(horizon: f64) -> Self {
        BusyIntervalSet {
            intervals: Vec::new(),
            horizon,
        }
    }

    /// Normalizes arbitrary `(start, end)` pairs: clips to the horizon, drops
    /// empty pieces, and merges overlapping or touching intervals.
    pub fn from_intervals(raw: impl IntoIterator<Item = (f64, f64)>, horizon: f64) -> Self {
        let mut clipped: Vec<(f64, f64)> = raw
            .into_iter()
            .map(|(s, e)| (s.max(0.0), e.min(horizon)))
            .filter(|(s, e)| e > s)
            .collect();
        clipped.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(clipped.len());
        for (s, e) in clipped {
            match merged.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        BusyIntervalSet {
            intervals: merged,
            horizon,
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn union(&self, other: &BusyIntervalSet) -> BusyIntervalSet {
        let horizon = self.horizon.max(other.horizon);
        BusyIntervalSet::from_intervals(
            self.intervals.iter().chain(&other.intervals).copied(),
            horizon,
        )
    }

    /// Total busy time in seconds.
    pub fn busy_time(&self) -> f64 {
        self.intervals.iter().map(|(s, e)| e - s).sum()
    }

    pub fn busy_fraction(&self) -> f64 {
        self.busy_time() / self.horizon
    }

    /// True when every busy instant of `other` is also busy in `self`.
    pub fn is_superset_of(&self, other: &BusyIntervalSet) -> bool {
        let mut j = 0;
        for &(s, e) in &other.intervals {
            while j < self.intervals.len() && self.intervals[j].1 < e {
                j += 1;
            }
            match self.intervals.get(j) {
                Some(&(cs, ce)) if cs <= s && e <= ce => {}
                _ => return false,
            }
        }
        true
    }
}

/// Union of `[arrival, arrival + airtime]` over all packets, clipped to the
/// horizon. Overlapping transmissions show up as a single busy period.
pub fn occupancy_union(packets: &[Packet], horizon: f64) -> Result<BusyIntervalSet> {
    check_horizon(horizon)?;
    if let Some(p) = packets
        .iter()
        .find(|p| !(p.arrival >= 0.0 && p.arrival <= horizon && p.airtime >= 0.0))
    {
        return Err(Error::invalid(format!(
            "packet at {} (airtime {}) outside [0, {horizon}]",
            p.arrival, p.airtime
        )));
    }
    Ok(BusyIntervalSet::from_intervals(
        packets.iter().map(|p| (p.arrival, p.end())),
        horizon,
    ))
}

/// What a node hears: the union of the shared components (same sample path
/// for every node that lists them) and its own components.
pub fn compose_node_traffic(
    shared: &[Vec<Packet>],
    own: &[Vec<Packet>],
    horizon: f64,
) -> Result<BusyIntervalSet> {
    let all: Vec<Packet> = shared.iter().chain(own).flatten().copied().collect();
    occupancy_union(&all, horizon)
}
