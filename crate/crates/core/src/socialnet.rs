//! Weighted undirected performer network built from handovers of work.
//!
//! An edge between two performers accumulates one count for every pair of
//! consecutive events within a trace where one performs the first event and
//! the other the second, in either direction. Node order is the order of
//! first appearance in the input; community detection traverses nodes in
//! exactly this order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eventlog::{EventLog, UNKNOWN_RESOURCE};

/// Index of a node inside a [`SocialNetwork`].
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SocialNetwork {
    names: Vec<String>,
    index: BTreeMap<String, NodeId>,
    /// Canonical keys `(min, max)`; weights strictly positive.
    edges: BTreeMap<(NodeId, NodeId), f64>,
}

impl SocialNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node if absent, returning its id.
    pub fn add_node(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    /// Adds (or accumulates onto) the undirected edge `a -- b`.
    pub fn add_edge(&mut self, a: &str, b: &str, weight: f64) -> Result<()> {
        if a == b {
            return Err(Error::Format(format!("self edge on `{a}` not allowed")));
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::Format(format!(
                "edge {a}--{b} must have a positive finite weight, got {weight}"
            )));
        }
        let ia = self.add_node(a);
        let ib = self.add_node(b);
        let key = (ia.min(ib), ia.max(ib));
        *self.edges.entry(key).or_insert(0.0) += weight;
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.names[id]
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    /// Node names in first-appearance order.
    pub fn node_names(&self) -> &[String] {
        &self.names
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.edges.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, a: NodeId, b: NodeId) -> f64 {
        let key = (a.min(b), a.max(b));
        self.edges.get(&key).copied().unwrap_or(0.0)
    }

    /// Total edge weight m.
    pub fn total_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    /// Degree k_i: sum of weights of all edges incident to `node`.
    pub fn degree(&self, node: NodeId) -> f64 {
        self.edges
            .iter()
            .filter(|(&(a, b), _)| a == node || b == node)
            .map(|(_, &w)| w)
            .sum()
    }

    /// Neighbors of `node` with edge weights, ascending by id.
    pub fn neighbors(&self, node: NodeId) -> Vec<(NodeId, f64)> {
        let mut out: Vec<(NodeId, f64)> = self
            .edges
            .iter()
            .filter_map(|(&(a, b), &w)| {
                if a == node {
                    Some((b, w))
                } else if b == node {
                    Some((a, w))
                } else {
                    None
                }
            })
            .collect();
        out.sort_by_key(|&(n, _)| n);
        out
    }
}

/// Builds the handover-of-work network for a log. With `normalize`, weights
/// are divided by the maximum so they fall in (0, 1].
pub fn build_social_network(log: &EventLog, normalize: bool) -> Result<SocialNetwork> {
    let distinct: Vec<&String> = log
        .resources
        .iter()
        .filter(|r| r.as_str() != UNKNOWN_RESOURCE)
        .collect();
    if distinct.len() < 2 {
        return Err(Error::DegenerateNetwork(format!(
            "need at least 2 distinct resources, found {}",
            distinct.len()
        )));
    }

    let mut counts: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut appearance: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for trace in &log.traces {
        for e in &trace.events {
            if e.resource != UNKNOWN_RESOURCE && seen.insert(e.resource.clone()) {
                appearance.push(e.resource.clone());
            }
        }
        for pair in trace.events.windows(2) {
            let (x, y) = (&pair[0].resource, &pair[1].resource);
            if x == y || x == UNKNOWN_RESOURCE || y == UNKNOWN_RESOURCE {
                continue;
            }
            let key = if x < y {
                (x.clone(), y.clone())
            } else {
                (y.clone(), x.clone())
            };
            *counts.entry(key).or_insert(0.0) += 1.0;
        }
    }

    let max = counts.values().cloned().fold(0.0_f64, f64::max);
    let mut net = SocialNetwork::new();
    for name in &appearance {
        net.add_node(name);
    }
    for ((a, b), c) in counts {
        let w = if normalize && max > 0.0 { c / max } else { c };
        net.add_edge(&a, &b, w)?;
    }
    Ok(net)
}

/// Loads an edge-list file: one `node_a,node_b,weight` per line.
pub fn load_social_network(path: impl AsRef<Path>) -> Result<SocialNetwork> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_edge_list(&text)
}

/// Parses edge-list text (see [`load_social_network`]). Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_edge_list(text: &str) -> Result<SocialNetwork> {
    let mut net = SocialNetwork::new();
    let mut seen: std::collections::BTreeSet<(String, String)> = Default::default();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Format(format!(
                "line {}: expected `node_a,node_b,weight`, got `{line}`",
                no + 1
            )));
        }
        let (a, b) = (parts[0], parts[1]);
        let weight: f64 = parts[2]
            .parse()
            .map_err(|_| Error::Format(format!("line {}: bad weight `{}`", no + 1, parts[2])))?;
        let key = if a < b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        if !seen.insert(key) {
            return Err(Error::Format(format!(
                "line {}: duplicate edge {a}--{b}",
                no + 1
            )));
        }
        net.add_edge(a, b, weight)?;
    }
    Ok(net)
}

/// Renders the edge-list text form.
pub fn edge_list_text(net: &SocialNetwork) -> String {
    let mut s = String::new();
    for (a, b, w) in net.edges() {
        let _ = writeln!(s, "{},{},{}", net.node_name(a), net.node_name(b), w);
    }
    s
}

/// Writes the edge-list file form.
pub fn save_social_network(net: &SocialNetwork, path: impl AsRef<Path>) -> Result<()> {
    crate::util::write_atomic(path.as_ref(), edge_list_text(net).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{log_of, table1_log, worked_example_network};

    #[test]
    fn worked_example_totals() {
        let net = worked_example_network();
        assert!((net.total_weight() - 2.9).abs() < 1e-12);
        let john = net.node_id("John").unwrap();
        assert!((net.degree(john) - 1.3).abs() < 1e-12);
        assert_eq!(
            net.node_names(),
            &["John", "Sue", "Mike", "Carol", "Peter", "Clare"]
        );
    }

    #[test]
    fn table1_network_has_handover_edges() {
        let log = table1_log();
        let net = build_social_network(&log, false).unwrap();
        assert_eq!(net.node_count(), 6);
        let w = |a: &str, b: &str| net.weight(net.node_id(a).unwrap(), net.node_id(b).unwrap());
        // Counted by hand over the five traces.
        assert_eq!(w("John", "Mike"), 4.0);
        assert_eq!(w("John", "Pete"), 2.0);
        assert_eq!(w("Sue", "Carol"), 4.0);
        assert_eq!(w("Sue", "Pete"), 2.0);
        assert_eq!(w("Sue", "Clare"), 1.0);
        assert_eq!(net.edge_count(), 5);
    }

    #[test]
    fn normalization_scales_into_unit_interval() {
        let log = table1_log();
        let net = build_social_network(&log, true).unwrap();
        for (_, _, w) in net.edges() {
            assert!(w > 0.0 && w <= 1.0);
        }
        let w = |a: &str, b: &str| net.weight(net.node_id(a).unwrap(), net.node_id(b).unwrap());
        assert_eq!(w("John", "Mike"), 1.0);
        assert_eq!(w("Sue", "Clare"), 0.25);
    }

    #[test]
    fn single_resource_is_degenerate() {
        let log = log_of(&[("c1", &[("a", "x", 0), ("b", "x", 10)])]);
        assert!(matches!(
            build_social_network(&log, false),
            Err(Error::DegenerateNetwork(_))
        ));
    }

    #[test]
    fn two_traces_one_edge_weight_two() {
        let log = log_of(&[
            ("c1", &[("a", "x", 0), ("b", "y", 10)]),
            ("c2", &[("a", "y", 0), ("b", "x", 10)]),
        ]);
        let net = build_social_network(&log, false).unwrap();
        assert_eq!(net.edge_count(), 1);
        let w = net.weight(net.node_id("x").unwrap(), net.node_id("y").unwrap());
        assert_eq!(w, 2.0);
    }

    #[test]
    fn build_is_invariant_to_trace_order() {
        let log = table1_log();
        let mut reversed = log.clone();
        reversed.traces.reverse();
        let a = build_social_network(&log, false).unwrap();
        let b = build_social_network(&reversed, false).unwrap();
        assert_eq!(a.total_weight(), b.total_weight());
        for (x, y, w) in a.edges() {
            let bx = b.node_id(a.node_name(x)).unwrap();
            let by = b.node_id(a.node_name(y)).unwrap();
            assert_eq!(b.weight(bx, by), w);
        }
    }

    #[test]
    fn degree_sum_is_twice_total() {
        let net = worked_example_network();
        let total: f64 = (0..net.node_count()).map(|i| net.degree(i)).sum();
        assert!((total - 2.0 * net.total_weight()).abs() < 1e-12);
    }

    #[test]
    fn edge_list_round_trip_and_errors() {
        let text = "John,Sue,0.9\nJohn,Mike,0.2\n";
        let net = parse_edge_list(text).unwrap();
        assert_eq!(net.node_count(), 3);
        assert!((net.total_weight() - 1.1).abs() < 1e-12);

        assert!(parse_edge_list("a,b,1\nb,a,2\n").is_err()); // duplicate
        assert!(parse_edge_list("a,b,-1\n").is_err()); // negative
        assert!(parse_edge_list("a,b,0\n").is_err()); // zero
        let empty = parse_edge_list("").unwrap();
        assert_eq!(empty.node_count(), 0);
    }

    #[test]
    fn unknown_resource_excluded() {
        let log = log_of(&[(
            "c1",
            &[("a", "x", 0), ("b", "UNKNOWN", 10), ("c", "y", 20), ("d", "x", 30)],
        )]);
        let net = build_social_network(&log, false).unwrap();
        assert_eq!(net.node_count(), 2);
        // Only the x->y handover survives; pairs touching UNKNOWN are skipped.
        assert_eq!(net.weight(0, 1), 1.0);
    }
}
