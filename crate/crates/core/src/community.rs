//! Modularity, modularity gain and the community-detection pass that turns a
//! performer network into a resource community network.
//!
//! Node traversal order is the network's input order, so results are fully
//! deterministic. Move decisions use the exact modularity delta (insertion
//! minus re-insertion after taking the node out of its community), which
//! guarantees that every accepted move strictly increases modularity. The
//! closed-form gain of [`modularity_gain`] is exposed separately; it is the
//! quantity reported for a single prospective move.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::socialnet::{NodeId, SocialNetwork};

/// A disjoint cover of a network's nodes. Community ids are dense indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    communities: Vec<BTreeSet<NodeId>>,
}

impl Partition {
    /// Every node in its own community.
    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            communities: (0..n).map(|i| BTreeSet::from([i])).collect(),
        }
    }

    /// Builds a partition from a raw `node -> label` vector. Labels are
    /// compacted to dense ids in order of first appearance.
    pub fn from_assignment(raw: &[usize]) -> Self {
        let mut relabel: Vec<(usize, usize)> = Vec::new();
        let mut assignment = Vec::with_capacity(raw.len());
        for &label in raw {
            let id = match relabel.iter().find(|(l, _)| *l == label) {
                Some((_, id)) => *id,
                None => {
                    let id = relabel.len();
                    relabel.push((label, id));
                    id
                }
            };
            assignment.push(id);
        }
        let mut communities = vec![BTreeSet::new(); relabel.len()];
        for (node, &c) in assignment.iter().enumerate() {
            communities[c].insert(node);
        }
        Partition {
            assignment,
            communities,
        }
    }

    /// Builds a partition from explicit groups covering `0..n`.
    pub fn of_groups(groups: &[Vec<NodeId>], n: usize) -> Result<Self> {
        let mut raw = vec![usize::MAX; n];
        for (c, group) in groups.iter().enumerate() {
            for &node in group {
                if node >= n {
                    return Err(Error::Argument(format!("node {node} out of range")));
                }
                if raw[node] != usize::MAX {
                    return Err(Error::Argument(format!(
                        "node {node} assigned to more than one community"
                    )));
                }
                raw[node] = c;
            }
        }
        if raw.iter().any(|&c| c == usize::MAX) {
            return Err(Error::Argument("partition does not cover all nodes".into()));
        }
        Ok(Self::from_assignment(&raw))
    }

    pub fn num_nodes(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_communities(&self) -> usize {
        self.communities.len()
    }

    pub fn community_of(&self, node: NodeId) -> usize {
        self.assignment[node]
    }

    pub fn members(&self, community: usize) -> &BTreeSet<NodeId> {
        &self.communities[community]
    }

    pub fn communities(&self) -> &[BTreeSet<NodeId>] {
        &self.communities
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }
}

/// Modularity Q of a partition: the pairwise comparison of edge weight to the
/// degree null model, summed over distinct same-community node pairs and
/// normalised by twice the total edge weight.
pub fn modularity(net: &SocialNetwork, part: &Partition) -> Result<f64> {
    let m = net.total_weight();
    if m <= 0.0 {
        return Err(Error::DegenerateNetwork(
            "total edge weight is zero".into(),
        ));
    }
    if part.num_nodes() != net.node_count() {
        return Err(Error::Argument(format!(
            "partition covers {} nodes, network has {}",
            part.num_nodes(),
            net.node_count()
        )));
    }
    let degrees: Vec<f64> = (0..net.node_count()).map(|i| net.degree(i)).collect();
    let mut q = 0.0;
    for members in part.communities() {
        let mut w_in = 0.0;
        for (a, b, w) in net.edges() {
            if members.contains(&a) && members.contains(&b) {
                w_in += w;
            }
        }
        let k_sum: f64 = members.iter().map(|&i| degrees[i]).sum();
        let k_sq: f64 = members.iter().map(|&i| degrees[i] * degrees[i]).sum();
        // Ordered pairs i != j inside the community.
        q += 2.0 * w_in - (k_sum * k_sum - k_sq) / (2.0 * m);
    }
    Ok(q / (2.0 * m))
}

/// Closed-form gain for moving `node` into `target`: the weight from the node
/// into the target over 2m, minus the target's boundary weight times the
/// node's degree over 2m^2.
pub fn modularity_gain(
    net: &SocialNetwork,
    part: &Partition,
    node: NodeId,
    target: usize,
) -> Result<f64> {
    let m = net.total_weight();
    if m <= 0.0 {
        return Err(Error::DegenerateNetwork(
            "total edge weight is zero".into(),
        ));
    }
    if target >= part.num_communities() {
        return Err(Error::Argument(format!("no community {target}")));
    }
    if part.community_of(node) == target {
        return Err(Error::Argument(format!(
            "node {node} is already in community {target}"
        )));
    }
    let members = part.members(target);
    let k_i = net.degree(node);
    let k_into: f64 = members.iter().map(|&u| net.weight(node, u)).sum();
    let boundary: f64 = net
        .edges()
        .filter(|&(a, b, _)| members.contains(&a) != members.contains(&b))
        .map(|(_, _, w)| w)
        .sum();
    Ok(k_into / (2.0 * m) - boundary * k_i / (2.0 * m * m))
}

/// A community of performers plus its internal (loop) weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Community {
    pub id: usize,
    /// Original performer names, in network input order.
    pub members: Vec<String>,
    /// Sum of the original edge weights inside the community.
    pub loop_weight: f64,
}

/// The community-level graph: communities as nodes, inter-community edge
/// weights, and loop edges carrying each community's internal weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceCommunityNetwork {
    pub communities: Vec<Community>,
    /// `(smaller id, larger id) -> summed cross weight`; only nonzero pairs.
    pub inter_weights: Vec<(usize, usize, f64)>,
}

impl ResourceCommunityNetwork {
    pub fn num_communities(&self) -> usize {
        self.communities.len()
    }

    /// Member sets as sorted name lists, for comparisons in tests.
    pub fn member_sets(&self) -> Vec<BTreeSet<String>> {
        self.communities
            .iter()
            .map(|c| c.members.iter().cloned().collect())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// One accepted move, recorded at original-node granularity.
#[derive(Debug, Clone)]
pub struct MoveRecord {
    pub assignment_before: Vec<usize>,
    pub assignment_after: Vec<usize>,
    /// Exact modularity delta of the move.
    pub gain: f64,
}

/// Working graph for one aggregation level.
struct LevelGraph {
    n: usize,
    adj: Vec<Vec<(usize, f64)>>,
    /// Self-loop weight per node (counted twice in the degree).
    loops: Vec<f64>,
    degrees: Vec<f64>,
    /// Original node ids folded into each working node.
    members: Vec<Vec<NodeId>>,
    m: f64,
}

impl LevelGraph {
    fn from_network(net: &SocialNetwork) -> Self {
        let n = net.node_count();
        let mut adj = vec![Vec::new(); n];
        for (a, b, w) in net.edges() {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(v, _)| v);
        }
        let degrees = (0..n).map(|i| net.degree(i)).collect();
        LevelGraph {
            n,
            adj,
            loops: vec![0.0; n],
            degrees,
            members: (0..n).map(|i| vec![i]).collect(),
            m: net.total_weight(),
        }
    }

    /// Collapses communities into super-nodes; loop weights accumulate the
    /// internal edges, degrees count loops twice. Total weight is preserved.
    fn aggregate(&self, assignment: &[usize], num_comms: usize) -> Self {
        let mut loops = vec![0.0; num_comms];
        let mut cross: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
        for v in 0..self.n {
            let cv = assignment[v];
            loops[cv] += self.loops[v];
            for &(u, w) in &self.adj[v] {
                if u <= v {
                    continue; // each undirected edge once
                }
                let cu = assignment[u];
                if cu == cv {
                    loops[cv] += w;
                } else {
                    let key = (cv.min(cu), cv.max(cu));
                    *cross.entry(key).or_insert(0.0) += w;
                }
            }
        }
        let mut adj = vec![Vec::new(); num_comms];
        for (&(a, b), &w) in &cross {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(v, _)| v);
        }
        let mut members = vec![Vec::new(); num_comms];
        for v in 0..self.n {
            members[assignment[v]].extend(self.members[v].iter().copied());
        }
        for list in &mut members {
            list.sort_unstable();
        }
        let degrees = (0..num_comms)
            .map(|c| 2.0 * loops[c] + adj[c].iter().map(|&(_, w)| w).sum::<f64>())
            .collect();
        LevelGraph {
            n: num_comms,
            adj,
            loops,
            degrees,
            members,
            m: self.m,
        }
    }
}

/// Original-node community labels implied by a level assignment.
fn to_original_assignment(graph: &LevelGraph, comm: &[usize], original_n: usize) -> Vec<usize> {
    let mut out = vec![0usize; original_n];
    for (v, members) in graph.members.iter().enumerate() {
        for &orig in members {
            out[orig] = comm[v];
        }
    }
    out
}

/// Sweeps nodes in input order until a full sweep makes no move. Returns the
/// local assignment and whether anything moved at this level.
fn optimize_level(
    graph: &LevelGraph,
    original_n: usize,
    records: Option<&mut Vec<MoveRecord>>,
) -> (Vec<usize>, bool) {
    const SWEEP_CAP: usize = 10_000;
    let m = graph.m;
    let mut comm: Vec<usize> = (0..graph.n).collect();
    let mut comm_degree: Vec<f64> = graph.degrees.clone();
    let mut moved_any = false;
    let mut records = records;

    for _ in 0..SWEEP_CAP {
        let mut moved_this_sweep = false;
        for v in 0..graph.n {
            let former = comm[v];
            let k_v = graph.degrees[v];
            // Take the node out before weighing alternatives.
            comm_degree[former] -= k_v;

            // Weight from v into each adjacent community.
            let mut into: Vec<(usize, f64)> = Vec::new();
            for &(u, w) in &graph.adj[v] {
                let c = comm[u];
                match into.iter_mut().find(|(cc, _)| *cc == c) {
                    Some((_, acc)) => *acc += w,
                    None => into.push((c, w)),
                }
            }
            let delta = |c: usize, k_into: f64| -> f64 {
                k_into / m - k_v * comm_degree[c] / (2.0 * m * m)
            };
            let stay_gain = delta(
                former,
                into.iter()
                    .find(|(c, _)| *c == former)
                    .map(|&(_, w)| w)
                    .unwrap_or(0.0),
            );

            let mut best = former;
            let mut best_gain = stay_gain;
            into.sort_by_key(|&(c, _)| c);
            for &(c, k_into) in &into {
                if c == former {
                    continue;
                }
                let g = delta(c, k_into);
                if g > best_gain + 1e-12 {
                    best_gain = g;
                    best = c;
                }
            }

            comm_degree[best] += k_v;
            if best != former {
                if let Some(recs) = records.as_deref_mut() {
                    let before = to_original_assignment(graph, &comm, original_n);
                    comm[v] = best;
                    recs.push(MoveRecord {
                        assignment_before: before,
                        assignment_after: to_original_assignment(graph, &comm, original_n),
                        gain: best_gain - stay_gain,
                    });
                } else {
                    comm[v] = best;
                }
                moved_this_sweep = true;
                moved_any = true;
            }
        }
        if !moved_this_sweep {
            break;
        }
    }
    (comm, moved_any)
}

/// Runs community detection and returns the community network.
pub fn louvain(net: &SocialNetwork) -> Result<ResourceCommunityNetwork> {
    louvain_with_trace(net, false).map(|(rcn, _)| rcn)
}

/// Like [`louvain`] but optionally records every accepted move with its exact
/// modularity delta, for verification.
pub fn louvain_with_trace(
    net: &SocialNetwork,
    record: bool,
) -> Result<(ResourceCommunityNetwork, Vec<MoveRecord>)> {
    if net.total_weight() <= 0.0 {
        return Err(Error::DegenerateNetwork(
            "total edge weight is zero; nothing to cluster".into(),
        ));
    }
    let n = net.node_count();
    let mut graph = LevelGraph::from_network(net);
    let mut records: Vec<MoveRecord> = Vec::new();

    loop {
        let recs = if record { Some(&mut records) } else { None };
        let (comm, moved) = optimize_level(&graph, n, recs);
        if !moved {
            break;
        }
        // Compact community labels in order of first appearance.
        let mut relabel: Vec<usize> = Vec::new();
        let mut compact = vec![0usize; graph.n];
        for v in 0..graph.n {
            let c = comm[v];
            let id = match relabel.iter().position(|&l| l == c) {
                Some(i) => i,
                None => {
                    relabel.push(c);
                    relabel.len() - 1
                }
            };
            compact[v] = id;
        }
        let num_comms = relabel.len();
        if num_comms == graph.n {
            break; // nothing merged
        }
        graph = graph.aggregate(&compact, num_comms);
    }

    // Final partition over original nodes, labels in input-order of first
    // appearance.
    let mut final_assignment = vec![0usize; n];
    for (v, members) in graph.members.iter().enumerate() {
        for &orig in members {
            final_assignment[orig] = v;
        }
    }
    let part = Partition::from_assignment(&final_assignment);
    Ok((build_rcn(net, &part), records))
}

/// Builds the community network for a partition of the original network.
pub fn build_rcn(net: &SocialNetwork, part: &Partition) -> ResourceCommunityNetwork {
    let k = part.num_communities();
    let mut loops = vec![0.0; k];
    let mut inter: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
    for (a, b, w) in net.edges() {
        let (ca, cb) = (part.community_of(a), part.community_of(b));
        if ca == cb {
            loops[ca] += w;
        } else {
            *inter.entry((ca.min(cb), ca.max(cb))).or_insert(0.0) += w;
        }
    }
    let communities = (0..k)
        .map(|c| {
            let mut ids: Vec<NodeId> = part.members(c).iter().copied().collect();
            ids.sort_unstable();
            Community {
                id: c,
                members: ids.iter().map(|&i| net.node_name(i).to_string()).collect(),
                loop_weight: loops[c],
            }
        })
        .collect();
    ResourceCommunityNetwork {
        communities,
        inter_weights: inter.into_iter().map(|((a, b), w)| (a, b, w)).collect(),
    }
}
