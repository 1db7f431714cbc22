use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use super::report::{accuracy, baseline_persistence, CrossEval, EvalReport, NodeReport};
use super::{derive_seed, Scenario};
use crate::error::{Error, Result};
use crate::federation::{aggregate, corrupt, exchange, GlobalModel, ModelMessage};
use crate::neuralnet::{evaluate, init_params, train, EpochMetrics, ParamVector, TrainConfig};
use crate::sensing::{build_dataset, sense, ChannelTrace, Dataset};
use crate::traffic::{compose_node_traffic, sample_arrivals, BusyIntervalSet, Packet};

/// Sampled packets of every component of a scenario for one seed.
#[derive(Debug, Clone)]
pub struct ScenarioTraffic {
    pub horizon: f64,
    shared: BTreeMap<String, Vec<Packet>>,
    own: BTreeMap<u32, Vec<Packet>>,
}

impl ScenarioTraffic {
    /// Shared components are sampled once and reused by every node that
    /// hears them, so those nodes see the same sample path.
    pub fn generate(scenario: &Scenario, seed: u64, horizon: f64) -> Result<Self> {
        let shared = scenario
            .shared
            .iter()
            .map(|proc| {
                let s = derive_seed(seed, &format!("shared/{}", proc.source_id));
                Ok((proc.source_id.clone(), sample_arrivals(proc, horizon, s)?))
            })
            .collect::<Result<_>>()?;
        let own = scenario
            .nodes
            .iter()
            .map(|node| {
                let s = derive_seed(seed, &format!("own/{}", node.id));
                Ok((node.id, sample_arrivals(&node.own_process(), horizon, s)?))
            })
            .collect::<Result<_>>()?;
        Ok(ScenarioTraffic {
            horizon,
            shared,
            own,
        })
    }

    pub fn shared_packets(&self, source_id: &str) -> Option<&[Packet]> {
        self.shared.get(source_id).map(Vec::as_slice)
    }

    /// Continuous occupancy as heard by `node`.
    pub fn busy_set(&self, scenario: &Scenario, node: u32) -> Result<BusyIntervalSet> {
        let spec = scenario.node(node)?;
        let shared: Vec<Vec<Packet>> = spec
            .shared
            .iter()
            .map(|s| {
                self.shared
                    .get(s)
                    .cloned()
                    .ok_or_else(|| Error::InvalidScenario(format!("unknown source `{s}`")))
            })
            .collect::<Result<_>>()?;
        let own = self.own.get(&node).cloned().unwrap_or_default();
        compose_node_traffic(&shared, &[own], self.horizon)
    }

    pub fn trace(&self, scenario: &Scenario, node: u32) -> Result<ChannelTrace> {
        let spec = scenario.node(node)?;
        sense(
            &self.busy_set(scenario, node)?,
            scenario.delta,
            spec.channel,
        )
    }
}

/// Training and validation datasets of `node`. The validation trace comes
/// from the same traffic processes under `val_seed` and spans 10% of the
/// training slots.
pub fn split_validation(
    scenario: &Scenario,
    node: u32,
    train_seed: u64,
    val_seed: u64,
) -> Result<(Dataset, Dataset)> {
    let (train, val) = split_traces(scenario, node, train_seed, val_seed)?;
    Ok((
        build_dataset(&train, scenario.window_len)?,
        build_dataset(&val, scenario.window_len)?,
    ))
}

fn split_traces(
    scenario: &Scenario,
    node: u32,
    train_seed: u64,
    val_seed: u64,
) -> Result<(ChannelTrace, ChannelTrace)> {
    if train_seed == val_seed {
        return Err(Error::invalid(
            "validation seed must differ from the training seed",
        ));
    }
    let train = ScenarioTraffic::generate(scenario, train_seed, scenario.horizon)?;
    let val = ScenarioTraffic::generate(scenario, val_seed, scenario.validation_horizon())?;
    Ok((train.trace(scenario, node)?, val.trace(scenario, node)?))
}

/// Everything a run produced for one node.
#[derive(Debug, Clone)]
pub struct NodeArtifacts {
    pub id: u32,
    pub train_trace: ChannelTrace,
    pub val_trace: ChannelTrace,
    pub local: Option<ParamVector>,
    pub global: Option<GlobalModel>,
    pub metrics: Vec<EpochMetrics>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: EvalReport,
    pub nodes: Vec<NodeArtifacts>,
}

impl RunOutput {
    pub fn node(&self, id: u32) -> Option<&NodeArtifacts> {
        self.nodes.iter().find(|n| n.id == id)
    }
}

struct Local {
    params: ParamVector,
    metrics: Vec<EpochMetrics>,
    train_ms: f64,
}

struct Prepared {
    train_trace: ChannelTrace,
    val_trace: ChannelTrace,
    train_set: Dataset,
    val_set: Dataset,
}

/// Runs the whole pipeline. Every node trains on its own trace, broadcasts
/// once to its one-hop neighbors, and averages what it receives; local and
/// global models are then scored on held-out validation traces.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    let started = Instant::now();
    scenario.validate()?;
    let topology = scenario.topology()?;
    let seeds = scenario.seeds;
    if seeds.traffic == seeds.validation {
        return Err(Error::invalid(
            "validation seed must differ from the traffic seed",
        ));
    }
    let train_traffic = ScenarioTraffic::generate(scenario, seeds.traffic, scenario.horizon)?;
    let val_traffic =
        ScenarioTraffic::generate(scenario, seeds.validation, scenario.validation_horizon())?;

    let prepared: Vec<Prepared> = scenario
        .nodes
        .iter()
        .map(|node| {
            let train_trace = train_traffic.trace(scenario, node.id)?;
            let val_trace = val_traffic.trace(scenario, node.id)?;
            Ok(Prepared {
                train_set: build_dataset(&train_trace, scenario.window_len)?,
                val_set: build_dataset(&val_trace, scenario.window_len)?,
                train_trace,
                val_trace,
            })
        })
        .collect::<Result<_>>()?;

    // every node starts from the same initial point so their parameters
    // stay comparable under averaging
    let init = init_params(scenario.arch, seeds.init)?;

    let locals: Vec<Result<Local>> = scenario
        .nodes
        .par_iter()
        .zip(prepared.par_iter())
        .map(|(node, prep)| {
            let t0 = Instant::now();
            // one shuffle seed for all nodes: identical data then yields
            // identical models
            let config = TrainConfig::new(scenario.epochs, scenario.learning_rate, seeds.shuffle);
            let outcome =
                train(&init, &prep.train_set, Some(&prep.val_set), &config).map_err(|e| {
                    Error::Node {
                        node: node.id,
                        source: Box::new(e),
                    }
                })?;
            Ok(Local {
                params: outcome.params,
                metrics: outcome.metrics,
                train_ms: t0.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect();

    // one broadcast per successfully trained node, through the wire codec
    let mut outgoing = Vec::new();
    for (node, local) in scenario.nodes.iter().zip(&locals) {
        if let Ok(local) = local {
            let bytes = ModelMessage::new(node.id, node.channel, &local.params)?.to_bytes();
            outgoing.push(ModelMessage::from_bytes(&bytes)?);
        }
    }
    let inboxes = exchange(&topology, &outgoing)?;

    let globals: Vec<Option<GlobalModel>> = scenario
        .nodes
        .iter()
        .zip(&locals)
        .map(|(node, local)| {
            let Ok(local) = local else { return Ok(None) };
            let received = inboxes[&node.id]
                .iter()
                .filter(|m| m.channel_id == node.channel)
                .map(|m| {
                    let seed =
                        derive_seed(seeds.shuffle, &format!("noise/{}/{}", node.id, m.node_id));
                    Ok((m.node_id, corrupt(&m.params(), scenario.noise_std, seed)?))
                })
                .collect::<Result<Vec<_>>>()?;
            aggregate(
                node.id,
                &local.params,
                &received,
                None,
                scenario.aggregation,
            )
            .map(Some)
        })
        .collect::<Result<_>>()?;

    let index: BTreeMap<u32, usize> = scenario
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id, i))
        .collect();

    let reports: Vec<NodeReport> = scenario
        .nodes
        .par_iter()
        .enumerate()
        .map(|(i, node)| {
            let prep = &prepared[i];
            let neighbors: Vec<u32> = topology.neighbors(node.id)?.iter().copied().collect();
            let persistence = persistence_accuracy(&prep.val_trace)?;
            let mut report = NodeReport {
                node_id: node.id,
                channel: node.channel,
                neighbors: neighbors.clone(),
                train_slots: prep.train_trace.len(),
                val_slots: prep.val_trace.len(),
                train_busy_fraction: prep.train_trace.busy_fraction(),
                val_busy_fraction: prep.val_trace.busy_fraction(),
                persistence_accuracy: persistence,
                epochs: Vec::new(),
                local_val_accuracy: None,
                local_val_loss: None,
                global_val_accuracy: None,
                global_val_loss: None,
                contributors: Vec::new(),
                cross: Vec::new(),
                train_ms: 0.0,
                failure: None,
            };
            match (&locals[i], &globals[i]) {
                (Ok(local), Some(global)) => {
                    let le = evaluate(&local.params, &prep.val_set)?;
                    let ge = evaluate(&global.params, &prep.val_set)?;
                    report.epochs = local.metrics.clone();
                    report.local_val_accuracy = Some(le.accuracy);
                    report.local_val_loss = Some(le.loss);
                    report.global_val_accuracy = Some(ge.accuracy);
                    report.global_val_loss = Some(ge.loss);
                    report.contributors = global.contributors.clone();
                    report.train_ms = local.train_ms;
                    for &nb in &neighbors {
                        let other = &prepared[index[&nb]];
                        report.cross.push(CrossEval {
                            trace_of: nb,
                            local_accuracy: evaluate(&local.params, &other.val_set)?.accuracy,
                            global_accuracy: evaluate(&global.params, &other.val_set)?.accuracy,
                            persistence_accuracy: persistence_accuracy(&other.val_trace)?,
                        });
                    }
                }
                (Err(e), _) => report.failure = Some(e.to_string()),
                (Ok(_), None) => report.failure = Some("aggregation skipped".into()),
            }
            Ok(report)
        })
        .collect::<Result<_>>()?;

    let report = EvalReport::assemble(scenario, reports, started.elapsed().as_secs_f64() * 1e3);

    let nodes = scenario
        .nodes
        .iter()
        .zip(prepared)
        .zip(locals.into_iter().zip(globals))
        .map(|((node, prep), (local, global))| {
            let (local, metrics) = match local {
                Ok(l) => (Some(l.params), l.metrics),
                Err(_) => (None, Vec::new()),
            };
            NodeArtifacts {
                id: node.id,
                train_trace: prep.train_trace,
                val_trace: prep.val_trace,
                local,
                global,
                metrics,
            }
        })
        .collect();

    Ok(RunOutput { report, nodes })
}

fn persistence_accuracy(trace: &ChannelTrace) -> Result<f64> {
    let predictions = baseline_persistence(trace)?;
    let targets: Vec<usize> = trace.slots[1..].iter().map(|&s| usize::from(s)).collect();
    accuracy(&predictions, &targets)
}
