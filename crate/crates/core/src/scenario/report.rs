use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Scenario, HIDDEN_TERMINAL_NAME};
use crate::error::{Error, Result};
use crate::neuralnet::{Architecture, EpochMetrics};
use crate::sensing::ChannelTrace;

/// Minimum accuracy gain of N1's global model over its local model on N2's
/// traffic for the hidden-terminal check.
pub const HIDDEN_TERMINAL_MARGIN: f64 = 0.01;
/// Allowed excess of the global error rate over the local one.
pub const ETA_SLACK: f64 = 0.005;
/// Allowed shortfall of a trained model against the persistence baseline.
pub const BASELINE_SLACK: f64 = 0.01;

/// Parameter count commonly quoted for the {60, 120} network. The standard
/// LSTM count for that shape is 102,242.
pub const QUOTED_BIG_PARAM_COUNT: usize = 102_252;

/// The quoted count for `arch` when it disagrees with [`Architecture::param_count`].
pub fn quoted_param_count(arch: Architecture) -> Option<usize> {
    (arch == Architecture::t_b() && arch.param_count() != QUOTED_BIG_PARAM_COUNT)
        .then_some(QUOTED_BIG_PARAM_COUNT)
}

/// Accuracy of one node's models on a neighbor's validation trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossEval {
    pub trace_of: u32,
    pub local_accuracy: f64,
    pub global_accuracy: f64,
    pub persistence_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub node_id: u32,
    pub channel: u32,
    pub neighbors: Vec<u32>,
    pub train_slots: usize,
    pub val_slots: usize,
    pub train_busy_fraction: f64,
    pub val_busy_fraction: f64,
    /// Accuracy of repeating the last slot on this node's validation trace.
    pub persistence_accuracy: f64,
    /// Local training curve.
    pub epochs: Vec<EpochMetrics>,
    pub local_val_accuracy: Option<f64>,
    pub local_val_loss: Option<f64>,
    pub global_val_accuracy: Option<f64>,
    pub global_val_loss: Option<f64>,
    pub contributors: Vec<u32>,
    pub cross: Vec<CrossEval>,
    pub train_ms: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario: String,
    pub arch: Architecture,
    pub param_count: usize,
    /// Differing count quoted elsewhere for this architecture, if any.
    pub quoted_param_count: Option<usize>,
    pub payload_bytes: usize,
    pub primary: u32,
    /// Validation error rate of the primary's local model.
    pub eta1: Option<f64>,
    /// Validation error rate of the primary's global model.
    pub eta2: Option<f64>,
    pub nodes: Vec<NodeReport>,
    pub total_ms: f64,
}

impl EvalReport {
    pub(crate) fn assemble(scenario: &Scenario, nodes: Vec<NodeReport>, total_ms: f64) -> Self {
        let primary = nodes.iter().find(|n| n.node_id == scenario.primary);
        let param_count = scenario.arch.param_count();
        EvalReport {
            scenario: scenario.name.clone(),
            arch: scenario.arch,
            param_count,
            quoted_param_count: quoted_param_count(scenario.arch),
            payload_bytes: param_count * 4,
            primary: scenario.primary,
            eta1: primary.and_then(|n| n.local_val_accuracy).map(|a| 1.0 - a),
            eta2: primary.and_then(|n| n.global_val_accuracy).map(|a| 1.0 - a),
            nodes,
            total_ms,
        }
    }

    pub fn node(&self, id: u32) -> Option<&NodeReport> {
        self.nodes.iter().find(|n| n.node_id == id)
    }

    /// Copy with every wall-clock field zeroed, for comparing runs.
    pub fn without_timings(&self) -> EvalReport {
        let mut r = self.clone();
        r.total_ms = 0.0;
        for n in &mut r.nodes {
            n.train_ms = 0.0;
            for e in &mut n.epochs {
                e.wall_time_ms = 0.0;
            }
        }
        r
    }

    /// Human-readable descriptions of every violated run invariant: node
    /// failures, `η₂ > η₁ + 0.005`, and local models trailing the persistence
    /// baseline by more than 0.01. Global models are reported but not held to
    /// the baseline.
    pub fn invariant_failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        match (self.eta1, self.eta2) {
            (Some(e1), Some(e2)) if e2 > e1 + ETA_SLACK => out.push(format!(
                "primary {}: global error {e2:.5} exceeds local error {e1:.5} + {ETA_SLACK}",
                self.primary
            )),
            (Some(_), Some(_)) => {}
            _ => out.push(format!("primary {}: no error rates", self.primary)),
        }
        for n in &self.nodes {
            if let Some(f) = &n.failure {
                out.push(format!("node {}: {f}", n.node_id));
                continue;
            }
            let floor = n.persistence_accuracy - BASELINE_SLACK;
            if let Some(acc) = n.local_val_accuracy.filter(|a| *a < floor) {
                out.push(format!(
                    "node {}: local accuracy {acc:.5} below persistence {:.5} - {BASELINE_SLACK}",
                    n.node_id, n.persistence_accuracy
                ));
            }
        }
        out
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per node and epoch:
    /// `node_id,epoch,loss,train_acc,val_acc,wall_time_ms`.
    pub fn write_epoch_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "node_id",
            "epoch",
            "loss",
            "train_acc",
            "val_acc",
            "wall_time_ms",
        ])?;
        for n in &self.nodes {
            for e in &n.epochs {
                w.write_record([
                    n.node_id.to_string(),
                    e.epoch.to_string(),
                    e.loss.to_string(),
                    e.train_acc.to_string(),
                    e.val_acc.map(|v| v.to_string()).unwrap_or_default(),
                    format!("{:.3}", e.wall_time_ms),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One row per node with its final local/global/baseline accuracies.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "node_id",
            "local_val_acc",
            "global_val_acc",
            "persistence_acc",
            "val_busy_fraction",
            "contributors",
            "failure",
        ])?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for n in &self.nodes {
            w.write_record([
                n.node_id.to_string(),
                opt(n.local_val_accuracy),
                opt(n.global_val_accuracy),
                n.persistence_accuracy.to_string(),
                n.val_busy_fraction.to_string(),
                n.contributors
                    .iter()
                    .map(u32::to_string)
                    .collect::<Vec<_>>()
                    .join(" "),
                n.failure.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fraction of positions where `predictions` and `targets` agree.
pub fn accuracy<T: PartialEq>(predictions: &[T], targets: &[T]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            actual: predictions.len(),
        });
    }
    if targets.is_empty() {
        return Err(Error::invalid("accuracy of an empty sequence"));
    }
    let hits = predictions
        .iter()
        .zip(targets)
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / targets.len() as f64)
}

/// Predicts every slot `t + 1` to equal slot `t`. Returns predictions for
/// slots `1..len`.
pub fn baseline_persistence(trace: &ChannelTrace) -> Result<Vec<usize>> {
    if trace.len() < 2 {
        return Err(Error::TraceTooShort {
            needed: 1,
            actual: trace.len(),
        });
    }
    Ok(trace.slots[..trace.len() - 1]
        .iter()
        .map(|&s| usize::from(s))
        .collect())
}

/// Accuracy gain of N1's global model over its local model on the
/// validation traffic heard at N2, which includes N3's transmissions.
pub fn hidden_terminal_margin(report: &EvalReport) -> Result<f64> {
    if report.scenario != HIDDEN_TERMINAL_NAME {
        return Err(Error::invalid(format!(
            "hidden-terminal check needs a `{HIDDEN_TERMINAL_NAME}` report, got `{}`",
            report.scenario
        )));
    }
    let n1 = report.node(1).ok_or(Error::UnknownNode(1))?;
    if let Some(f) = &n1.failure {
        return Err(Error::Node {
            node: 1,
            source: Box::new(Error::invalid(f.clone())),
        });
    }
    let cross = n1
        .cross
        .iter()
        .find(|c| c.trace_of == 2)
        .ok_or_else(|| Error::invalid("node 1 has no evaluation on node 2's traffic"))?;
    Ok(cross.global_accuracy - cross.local_accuracy)
}

/// True iff N1's global model beats its local model on N2's traffic by at
/// least `min_margin`.
pub fn hidden_terminal_check(report: &EvalReport, min_margin: f64) -> Result<bool> {
    Ok(hidden_terminal_margin(report)? >= min_margin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::DEFAULT_DELTA;

    #[test]
    fn accuracy_edges() {
        assert_eq!(accuracy(&[0, 1, 1], &[0, 1, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1, 0], &[1, 0, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 0, 0], &[0, 1, 1, 1]).unwrap(), 0.5);
        assert!(accuracy::<u8>(&[], &[]).is_err());
        assert!(accuracy(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn persistence_on_constant_and_alternating() {
        let flat = ChannelTrace::new(vec![1; 20], DEFAULT_DELTA, 0).unwrap();
        let p = baseline_persistence(&flat).unwrap();
        let t: Vec<usize> = flat.slots[1..].iter().map(|&s| s as usize).collect();
        assert_eq!(accuracy(&p, &t).unwrap(), 1.0);

        let alt =
            ChannelTrace::new((0..20).map(|k| (k % 2) as u8).collect(), DEFAULT_DELTA, 0).unwrap();
        let p = baseline_persistence(&alt).unwrap();
        let t: Vec<usize> = alt.slots[1..].iter().map(|&s| s as usize).collect();
        assert_eq!(accuracy(&p, &t).unwrap(), 0.0);

        let short = ChannelTrace::new(vec![1], DEFAULT_DELTA, 0).unwrap();
        assert!(baseline_persistence(&short).is_err());
    }

    fn node(id: u32, local: f64, global: f64, persistence: f64) -> NodeReport {
        NodeReport {
            node_id: id,
            channel: 0,
            neighbors: vec![],
            train_slots: 0,
            val_slots: 0,
            train_busy_fraction: 0.0,
            val_busy_fraction: 0.0,
            persistence_accuracy: persistence,
            epochs: vec![],
            local_val_accuracy: Some(local),
            local_val_loss: None,
            global_val_accuracy: Some(global),
            global_val_loss: None,
            contributors: vec![id],
            cross: vec![],
            train_ms: 0.0,
            failure: None,
        }
    }

    fn report(name: &str, nodes: Vec<NodeReport>) -> EvalReport {
        let mut s = super::super::three_neighbor();
        s.name = name.into();
        EvalReport::assemble(&s, nodes, 0.0)
    }

    #[test]
    fn eta_is_one_minus_accuracy() {
        let r = report("x", vec![node(0, 0.97, 0.98, 0.9)]);
        assert_eq!(r.eta1, Some(1.0 - 0.97));
        assert_eq!(r.eta2, Some(1.0 - 0.98));
        assert!(r.invariant_failures().is_empty());
    }

    #[test]
    fn invariant_failures_flag_regressions() {
        let r = report("x", vec![node(0, 0.99, 0.97, 0.9)]);
        assert_eq!(r.invariant_failures().len(), 1);
        let r = report("x", vec![node(0, 0.95, 0.95, 0.99)]);
        assert_eq!(r.invariant_failures().len(), 1);
        let mut failed = node(0, 0.9, 0.9, 0.9);
        failed.failure = Some("diverged".into());
        failed.local_val_accuracy = None;
        failed.global_val_accuracy = None;
        assert_eq!(report("x", vec![failed]).invariant_failures().len(), 2);
    }

    #[test]
    fn hidden_terminal_check_requires_matching_report() {
        let r = report("three-neighbor", vec![node(0, 0.9, 0.9, 0.9)]);
        assert!(hidden_terminal_check(&r, 0.01).is_err());

        let mut n1 = node(1, 0.9, 0.9, 0.9);
        n1.cross.push(CrossEval {
            trace_of: 2,
            local_accuracy: 0.95,
            global_accuracy: 0.98,
            persistence_accuracy: 0.99,
        });
        let mut r = report(HIDDEN_TERMINAL_NAME, vec![n1]);
        r.primary = 1;
        assert!((hidden_terminal_margin(&r).unwrap() - 0.03).abs() < 1e-12);
        assert!(hidden_terminal_check(&r, 0.01).unwrap());
        assert!(!hidden_terminal_check(&r, 0.05).unwrap());
    }

    #[test]
    fn csv_layout() {
        let mut n = node(0, 0.9, 0.9, 0.9);
        n.epochs.push(EpochMetrics {
            epoch: 1,
            loss: 0.5,
            train_acc: 0.75,
            val_acc: Some(0.8),
            wall_time_ms: 1.25,
        });
        let r = report("x", vec![n]);
        let mut buf = Vec::new();
        r.write_epoch_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "node_id,epoch,loss,train_acc,val_acc,wall_time_ms\n0,1,0.5,0.75,0.8,1.250\n"
        );
    }

    #[test]
    fn quoted_count_only_for_big_network() {
        let r = report("x", vec![]);
        assert_eq!(r.quoted_param_count, None);
        let s = super::super::three_neighbor().with_arch(super::super::ArchChoice::TB);
        let r = EvalReport::assemble(&s, vec![], 0.0);
        assert_eq!(r.param_count, 102_242);
        assert_eq!(r.quoted_param_count, Some(102_252));
    }
}
