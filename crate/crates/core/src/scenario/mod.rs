//! Experiment topologies and the end-to-end pipeline:
//! generate → sense → train → share → aggregate → evaluate.
//!
//! Scenario files are TOML:
//!
//! ```toml
//! name = "three-neighbor"
//! primary = 0
//! delta = 2e-5          # seconds per sensing slot
//! horizon = 1.0         # seconds of training trace
//! window_len = 100
//! epochs = 20
//! learning_rate = 0.3
//! noise_std = 0.0       # optional corruption of received models
//! aggregation = "uniform_mean"   # or "self_plus_scaled_sum"
//! edges = [[0, 1], [0, 2], [0, 3]]
//!
//! [arch]
//! input_dim = 2
//! p_units = 5
//! q_units = 5
//!
//! [seeds]
//! traffic = 11
//! init = 12
//! shuffle = 13
//! validation = 14
//!
//! [[shared]]            # a component heard by several nodes
//! source_id = "common"
//! rates = [5.0]         # arrivals per second
//!
//! [[nodes]]
//! id = 1
//! shared = ["common"]
//! own = [9.5, 12.0]     # rates heard only by this node
//! ```
//!
//! `[[shared]]` entries accept the optional `pkt_len_min`, `pkt_len_max`
//! (bytes) and `phy_rate` (bit/s) of an arrival process; `[[nodes]]` accept
//! `channel` (default 0).

mod builtin;
mod report;
mod run;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use builtin::{
    builtin_scenario, builtin_scenarios, five_neighbor, hidden_terminal, three_neighbor,
    BUILTIN_NAMES, HIDDEN_NODE_RATES, HIDDEN_TERMINAL_NAME,
};
pub use report::{
    accuracy, baseline_persistence, hidden_terminal_check, hidden_terminal_margin,
    quoted_param_count, CrossEval, EvalReport, NodeReport, BASELINE_SLACK, ETA_SLACK,
    HIDDEN_TERMINAL_MARGIN, QUOTED_BIG_PARAM_COUNT,
};
pub use run::{run, split_validation, NodeArtifacts, RunOutput, ScenarioTraffic};

use crate::error::{Error, Result};
use crate::federation::{AggregationRule, Topology};
use crate::neuralnet::{Architecture, LR_BIG, LR_SMALL};
use crate::sensing::{DEFAULT_DELTA, DEFAULT_WINDOW_LEN};
use crate::traffic::ArrivalProcess;

/// Validation traces cover this fraction of the training slot count.
pub const VALIDATION_FRACTION: f64 = 0.1;
/// Training-trace length of the desk profile, seconds.
pub const DESK_HORIZON: f64 = 1.0;
/// Training-trace length of the full-scale profile, seconds.
pub const PAPER_FULL_HORIZON: f64 = 5.0;
/// Default epochs for the small network.
pub const EPOCHS_SMALL: usize = 20;
/// Default epochs for the big network.
pub const EPOCHS_BIG: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub traffic: u64,
    pub init: u64,
    pub shuffle: u64,
    pub validation: u64,
}

impl Seeds {
    /// Four distinct seeds derived from one base value.
    pub fn from_base(base: u64) -> Self {
        Seeds {
            traffic: derive_seed(base, "traffic"),
            init: derive_seed(base, "init"),
            shuffle: derive_seed(base, "shuffle"),
            validation: derive_seed(base, "validation"),
        }
    }
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::from_base(2024)
    }
}

/// Stable seed derivation: FNV-1a over the label, mixed with `base` through
/// SplitMix64.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = base ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: u32,
    #[serde(default)]
    pub channel: u32,
    /// Ids of scenario-level shared components this node hears.
    #[serde(default)]
    pub shared: Vec<String>,
    /// Rates (arrivals per second) heard by this node alone.
    #[serde(default)]
    pub own: Vec<f64>,
}

impl NodeSpec {
    pub fn own_process(&self) -> ArrivalProcess {
        ArrivalProcess::new(format!("node{}/own", self.id), self.own.clone())
    }
}

/// Training-data scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// 1 s of trace (50,000 slots).
    Desk,
    /// 5 s of trace (250,000 slots).
    PaperFull,
}

impl Profile {
    pub fn horizon(self) -> f64 {
        match self {
            Profile::Desk => DESK_HORIZON,
            Profile::PaperFull => PAPER_FULL_HORIZON,
        }
    }
}

/// Network size preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ArchChoice {
    /// {P, Q} = {5, 5}
    #[value(name = "t_s")]
    TS,
    /// {P, Q} = {60, 120}
    #[value(name = "t_b")]
    TB,
}

impl ArchChoice {
    pub fn architecture(self) -> Architecture {
        match self {
            ArchChoice::TS => Architecture::t_s(),
            ArchChoice::TB => Architecture::t_b(),
        }
    }

    pub fn learning_rate(self) -> f64 {
        match self {
            ArchChoice::TS => LR_SMALL,
            ArchChoice::TB => LR_BIG,
        }
    }

    pub fn epochs(self) -> usize {
        match self {
            ArchChoice::TS => EPOCHS_SMALL,
            ArchChoice::TB => EPOCHS_BIG,
        }
    }
}

fn default_window_len() -> usize {
    DEFAULT_WINDOW_LEN
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

fn default_arch() -> Architecture {
    Architecture::t_s()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Node whose local/global error rates are reported as η₁/η₂.
    pub primary: u32,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub shared: Vec<ArrivalProcess>,
    /// Undirected one-hop links.
    #[serde(default)]
    pub edges: Vec<(u32, u32)>,
    #[serde(default = "default_arch")]
    pub arch: Architecture,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub horizon: f64,
    #[serde(default = "default_window_len")]
    pub window_len: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub aggregation: AggregationRule,
    #[serde(default)]
    pub seeds: Seeds,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Scenario::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are all representable in TOML")
    }

    /// Applies a network preset and its default step size and epoch count.
    pub fn with_arch(mut self, choice: ArchChoice) -> Self {
        self.arch = choice.architecture();
        self.learning_rate = choice.learning_rate();
        self.epochs = choice.epochs();
        self
    }

    pub fn with_profile(mut self, profile: Profile) -> Self {
        self.horizon = profile.horizon();
        self
    }

    pub fn with_seeds(mut self, seeds: Seeds) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn node(&self, id: u32) -> Result<&NodeSpec> {
        self.nodes
            .iter()
            .find(|n| n.id == id)
            .ok_or(Error::UnknownNode(id))
    }

    pub fn shared_process(&self, source_id: &str) -> Option<&ArrivalProcess> {
        self.shared.iter().find(|p| p.source_id == source_id)
    }

    pub fn topology(&self) -> Result<Topology> {
        Topology::from_edges(self.nodes.iter().map(|n| n.id), self.edges.iter().copied())
    }

    pub fn train_slots(&self) -> usize {
        crate::sensing::slot_count(self.horizon, self.delta)
    }

    pub fn validation_horizon(&self) -> f64 {
        self.horizon * VALIDATION_FRACTION
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(format!("{}: {msg}", self.name)));
        if self.nodes.is_empty() {
            return bad("no nodes".into());
        }
        let mut ids: Vec<u32> = self.nodes.iter().map(|n| n.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate node id".into());
        }
        if self.node(self.primary).is_err() {
            return bad(format!("primary node {} is not defined", self.primary));
        }
        self.topology()
            .map_err(|e| Error::InvalidScenario(format!("{}: {e}", self.name)))?;
        self.arch
            .validate()
            .map_err(|e| Error::InvalidScenario(format!("{}: {e}", self.name)))?;
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return bad(format!("delta {} must be positive", self.delta));
        }
        if !(self.horizon.is_finite() && self.horizon > self.delta) {
            return bad(format!("horizon {} must exceed delta", self.horizon));
        }
        if self.window_len == 0 {
            return bad("window_len must be positive".into());
        }
        let val_slots = crate::sensing::slot_count(self.validation_horizon(), self.delta);
        if val_slots <= self.window_len + 1 {
            return bad(format!(
                "validation trace of {val_slots} slots cannot fill a {}-slot window",
                self.window_len
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            ));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad(format!("noise_std {} must be non-negative", self.noise_std));
        }

        let mut source_ids: Vec<&str> = self.shared.iter().map(|p| p.source_id.as_str()).collect();
        source_ids.sort_unstable();
        if source_ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate shared source id".into());
        }
        for proc in &self.shared {
            proc.validate()
                .map_err(|e| Error::InvalidScenario(format!("{}: {e}", self.name)))?;
            let listeners = self
                .nodes
                .iter()
                .filter(|n| n.shared.contains(&proc.source_id))
                .count();
            if listeners < 2 {
                return bad(format!(
                    "shared source `{}` is heard by {listeners} node(s), needs at least 2",
                    proc.source_id
                ));
            }
        }
        for node in &self.nodes {
            for s in &node.shared {
                if self.shared_process(s).is_none() {
                    return bad(format!("node {} references unknown source `{s}`", node.id));
                }
            }
            node.own_process()
                .validate()
                .map_err(|e| Error::InvalidScenario(format!("{}: {e}", self.name)))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        let s = Seeds::from_base(1);
        let all = [s.traffic, s.init, s.shuffle, s.validation];
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(all[i], all[j]);
            }
        }
        assert_eq!(derive_seed(5, "x"), derive_seed(5, "x"));
        assert_ne!(derive_seed(5, "x"), derive_seed(6, "x"));
    }

    #[test]
    fn toml_round_trip() {
        let s = three_neighbor();
        let back = Scenario::from_toml(&s.to_toml()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let text = r#"
            name = "pair"
            primary = 0
            horizon = 0.5
            epochs = 1
            learning_rate = 0.05
            edges = [[0, 1]]

            [[shared]]
            source_id = "c"
            rates = [5.0]
            pkt_len_min = 2000
            pkt_len_max = 2364
            phy_rate = 24e6

            [[nodes]]
            id = 0
            shared = ["c"]

            [[nodes]]
            id = 1
            shared = ["c"]
            own = [3.0]
        "#;
        let s = Scenario::from_toml(text).unwrap();
        assert_eq!(s.arch, Architecture::t_s());
        assert_eq!(s.delta, DEFAULT_DELTA);
        assert_eq!(s.window_len, DEFAULT_WINDOW_LEN);
        assert_eq!(s.train_slots(), 25_000);
    }

    #[test]
    fn validation_catches_structure_errors() {
        let mut s = three_neighbor();
        s.primary = 42;
        assert!(s.validate().is_err());

        let mut s = three_neighbor();
        s.edges.push((0, 77));
        assert!(s.validate().is_err());

        let mut s = three_neighbor();
        for n in s.nodes.iter_mut().skip(1) {
            n.shared.clear();
        }
        assert!(s.validate().is_err(), "shared source with one listener");

        let mut s = three_neighbor();
        s.nodes[1].shared.push("nope".into());
        assert!(s.validate().is_err());

        let mut s = three_neighbor();
        s.horizon = 0.01;
        assert!(s.validate().is_err(), "validation trace too short");
    }

    #[test]
    fn arch_presets_set_training_defaults() {
        let s = three_neighbor().with_arch(ArchChoice::TB);
        assert_eq!(s.arch.param_count(), 102_242);
        assert_eq!(s.learning_rate, LR_BIG);
        assert_eq!(s.epochs, EPOCHS_BIG);
        let s = s.with_profile(Profile::PaperFull);
        assert_eq!(s.train_slots(), 250_000);
    }
}
