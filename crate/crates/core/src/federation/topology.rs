use std::collections::{BTreeMap, BTreeSet};

use super::message::ModelMessage;
use crate::error::{Error, Result};

/// Undirected one-hop reachability between nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Topology {
    adjacency: BTreeMap<u32, BTreeSet<u32>>,
}

impl Topology {
    pub fn new(nodes: impl IntoIterator<Item = u32>) -> Self {
        Topology {
            adjacency: nodes.into_iter().map(|n| (n, BTreeSet::new())).collect(),
        }
    }

    pub fn from_edges(
        nodes: impl IntoIterator<Item = u32>,
        edges: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self> {
        let mut topo = Topology::new(nodes);
        for (a, b) in edges {
            topo.connect(a, b)?;
        }
        Ok(topo)
    }

    /// Adds the symmetric edge `a ~ b`.
    pub fn connect(&mut self, a: u32, b: u32) -> Result<()> {
        if a == b {
            return Err(Error::invalid(format!("self-loop on node {a}")));
        }
        for n in [a, b] {
            if !self.adjacency.contains_key(&n) {
                return Err(Error::UnknownNode(n));
            }
        }
        self.adjacency.get_mut(&a).unwrap().insert(b);
        self.adjacency.get_mut(&b).unwrap().insert(a);
        Ok(())
    }

    pub fn nodes(&self) -> impl Iterator<Item = u32> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn contains(&self, node: u32) -> bool {
        self.adjacency.contains_key(&node)
    }

    pub fn neighbors(&self, node: u32) -> Result<&BTreeSet<u32>> {
        self.adjacency.get(&node).ok_or(Error::UnknownNode(node))
    }

    pub fn are_adjacent(&self, a: u32, b: u32) -> bool {
        self.adjacency.get(&a).is_some_and(|n| n.contains(&b))
    }

    /// Each undirected edge once, smaller id first.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        self.adjacency
            .iter()
            .flat_map(|(&a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    /// Hop count from `from` to every reachable node.
    pub fn distances(&self, from: u32) -> Result<BTreeMap<u32, usize>> {
        self.neighbors(from)?;
        let mut dist = BTreeMap::from([(from, 0)]);
        let mut frontier = vec![from];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for n in frontier {
                let d = dist[&n];
                for &m in &self.adjacency[&n] {
                    if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(m) {
                        e.insert(d + 1);
                        next.push(m);
                    }
                }
            }
            frontier = next;
        }
        Ok(dist)
    }
}

/// Nodes that receive a broadcast from `sender`: its one-hop neighbors and
/// nobody else. Messages are never relayed.
pub fn broadcast(topology: &Topology, sender: u32) -> Result<BTreeSet<u32>> {
    topology.neighbors(sender).cloned()
}

/// Delivers every node's message to its one-hop neighbors and returns each
/// node's inbox, ordered by sender id.
pub fn exchange(
    topology: &Topology,
    outgoing: &[ModelMessage],
) -> Result<BTreeMap<u32, Vec<ModelMessage>>> {
    let mut inboxes: BTreeMap<u32, Vec<ModelMessage>> =
        topology.nodes().map(|n| (n, Vec::new())).collect();
    let mut sorted: Vec<&ModelMessage> = outgoing.iter().collect();
    sorted.sort_by_key(|m| m.node_id);
    for msg in sorted {
        for to in broadcast(topology, msg.node_id)? {
            inboxes.get_mut(&to).unwrap().push(msg.clone());
        }
    }
    Ok(inboxes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::{Architecture, ParamVector};

    fn line() -> Topology {
        Topology::from_edges([1, 2, 3], [(1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn hidden_terminal_line() {
        let topo = line();
        assert_eq!(broadcast(&topo, 2).unwrap(), BTreeSet::from([1, 3]));
        assert_eq!(broadcast(&topo, 1).unwrap(), BTreeSet::from([2]));
        assert!(!topo.are_adjacent(1, 3));
    }

    #[test]
    fn isolated_node_reaches_nobody() {
        let topo = Topology::new([7]);
        assert!(broadcast(&topo, 7).unwrap().is_empty());
    }

    #[test]
    fn unknown_sender() {
        assert!(matches!(broadcast(&line(), 9), Err(Error::UnknownNode(9))));
        let mut topo = line();
        assert!(topo.connect(1, 9).is_err());
        assert!(topo.connect(1, 1).is_err());
    }

    #[test]
    fn star_delivers_one_copy_each() {
        let topo = Topology::from_edges(0..=5, (1..=5).map(|n| (0, n))).unwrap();
        let msg = ModelMessage::new(0, 0, &ParamVector::zeros(Architecture::new(2, 1, 1))).unwrap();
        let inboxes = exchange(&topo, &[msg]).unwrap();
        for n in 1..=5 {
            assert_eq!(inboxes[&n].len(), 1);
            assert_eq!(inboxes[&n][0].node_id, 0);
        }
        assert!(inboxes[&0].is_empty());
    }

    #[test]
    fn distances_on_line() {
        let d = line().distances(1).unwrap();
        assert_eq!(d[&1], 0);
        assert_eq!(d[&2], 1);
        assert_eq!(d[&3], 2);
    }

    #[test]
    fn edges_listed_once() {
        assert_eq!(line().edges(), vec![(1, 2), (2, 3)]);
    }
}
