//! Directly-follows graphs over activity alphabets.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Activity, EventLog};

/// A directed graph whose edges mark activities that can immediately succeed
/// one another. Edge endpoints are always part of the node set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dfg {
    nodes: BTreeSet<Activity>,
    edges: BTreeSet<(Activity, Activity)>,
}

impl Dfg {
    /// Builds a graph; endpoints of `edges` are merged into `nodes`.
    pub fn new(nodes: BTreeSet<Activity>, edges: BTreeSet<(Activity, Activity)>) -> Self {
        let mut nodes = nodes;
        for (x, y) in &edges {
            nodes.insert(x.clone());
            nodes.insert(y.clone());
        }
        Dfg { nodes, edges }
    }

    pub fn from_edges(edges: BTreeSet<(Activity, Activity)>) -> Self {
        Dfg::new(BTreeSet::new(), edges)
    }

    pub fn nodes(&self) -> &BTreeSet<Activity> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(Activity, Activity)> {
        &self.edges
    }

    pub fn has_edge(&self, from: &Activity, to: &Activity) -> bool {
        self.edges.contains(&(from.clone(), to.clone()))
    }
}

/// Discovers the directly-follows graph of a log: nodes are the log alphabet,
/// edges are all adjacent activity pairs across all traces.
pub fn dfg_of_log(log: &EventLog) -> Dfg {
    let mut edges = BTreeSet::new();
    for trace in log.traces() {
        for window in trace.steps().windows(2) {
            edges.insert((window[0].clone(), window[1].clone()));
        }
    }
    Dfg::new(log.alphabet().clone(), edges)
}
