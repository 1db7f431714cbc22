use super::{Scenario, Seeds, DESK_HORIZON, EPOCHS_SMALL};
use crate::error::{Error, Result};
use crate::federation::AggregationRule;
use crate::neuralnet::{Architecture, LR_SMALL};
use crate::sensing::{DEFAULT_DELTA, DEFAULT_WINDOW_LEN};
use crate::traffic::ArrivalProcess;

use super::NodeSpec;

pub const HIDDEN_TERMINAL_NAME: &str = "hidden-terminal";
pub const BUILTIN_NAMES: [&str; 3] = [HIDDEN_TERMINAL_NAME, "three-neighbor", "five-neighbor"];

/// Rate of the component every node in the neighbor scenarios hears.
const COMMON_RATE: f64 = 5.0;

/// Additional traffic heard by each neighbor, on top of the common 5.0.
const NEIGHBOR_OWN: [[f64; 2]; 5] = [
    [9.5, 12.0],
    [8.6, 10.5],
    [16.0, 6.0],
    [15.8, 21.0],
    [2.8, 13.0],
];

/// Default traffic of the hidden node N3: an offered load of about 0.73,
/// keeping N2's channel busy roughly half the time.
pub const HIDDEN_NODE_RATES: [f64; 1] = [1000.0];

fn base(name: &str, primary: u32) -> Scenario {
    Scenario {
        name: name.to_string(),
        primary,
        nodes: Vec::new(),
        shared: Vec::new(),
        edges: Vec::new(),
        arch: Architecture::t_s(),
        delta: DEFAULT_DELTA,
        horizon: DESK_HORIZON,
        window_len: DEFAULT_WINDOW_LEN,
        epochs: EPOCHS_SMALL,
        learning_rate: LR_SMALL,
        noise_std: 0.0,
        aggregation: AggregationRule::UniformMean,
        seeds: Seeds::default(),
    }
}

fn star(name: &str, neighbors: usize) -> Scenario {
    let mut s = base(name, 0);
    s.shared
        .push(ArrivalProcess::new("common", vec![COMMON_RATE]));
    s.nodes.push(NodeSpec {
        id: 0,
        channel: 0,
        shared: vec!["common".into()],
        own: Vec::new(),
    });
    for (k, own) in NEIGHBOR_OWN.iter().take(neighbors).enumerate() {
        let id = k as u32 + 1;
        s.nodes.push(NodeSpec {
            id,
            channel: 0,
            shared: vec!["common".into()],
            own: own.to_vec(),
        });
        s.edges.push((0, id));
    }
    s
}

/// Primary node 0 hears only the common 5.0 component; neighbors 1–3 hear
/// it plus their own traffic.
pub fn three_neighbor() -> Scenario {
    star("three-neighbor", 3)
}

/// [`three_neighbor`] with two more neighbors.
pub fn five_neighbor() -> Scenario {
    star("five-neighbor", 5)
}

/// Line N1 – N2 – N3. N2 hears everyone; N1 and N3 cannot hear each other.
/// `hidden_rates` is the traffic of N3, heard by N2 and N3 only.
pub fn hidden_terminal(hidden_rates: Vec<f64>) -> Scenario {
    let mut s = base(HIDDEN_TERMINAL_NAME, 1);
    s.shared = vec![
        ArrivalProcess::new("n1_tx", vec![COMMON_RATE]),
        ArrivalProcess::new("n2_tx", vec![COMMON_RATE]),
        ArrivalProcess::new("n3_tx", hidden_rates),
    ];
    let spec = |id: u32, shared: &[&str]| NodeSpec {
        id,
        channel: 0,
        shared: shared.iter().map(|s| s.to_string()).collect(),
        own: Vec::new(),
    };
    s.nodes = vec![
        spec(1, &["n1_tx", "n2_tx"]),
        spec(2, &["n1_tx", "n2_tx", "n3_tx"]),
        spec(3, &["n2_tx", "n3_tx"]),
    ];
    s.edges = vec![(1, 2), (2, 3)];
    s
}

pub fn builtin_scenarios() -> Vec<(&'static str, Scenario)> {
    vec![
        (
            HIDDEN_TERMINAL_NAME,
            hidden_terminal(HIDDEN_NODE_RATES.to_vec()),
        ),
        ("three-neighbor", three_neighbor()),
        ("five-neighbor", five_neighbor()),
    ]
}

pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    builtin_scenarios()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| s)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}
