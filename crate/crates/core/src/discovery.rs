//! Control-flow discovery and reducible-substructure detection.
//!
//! Discovery is the classic footprint-based algorithm: direct succession,
//! causality, parallelism and choice are read off the trace variants, places
//! come from maximal causal set pairs. Length-one loops cannot be expressed
//! by that construction, so an activity that directly follows itself in some
//! trace is recorded on the net as a self-loop marker instead and surfaces as
//! a fold candidate.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::EventLog;

/// A net transition. Invisible transitions carry no activity label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub name: String,
    /// Activity label; `None` marks an invisible transition.
    pub label: Option<String>,
}

/// One directed arc between a place and a transition (either direction).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub source: String,
    pub target: String,
    pub weight: u32,
}

/// Places, visible/invisible transitions and weighted arcs. Timing lives in
/// the log, not the net.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Gspn {
    pub places: BTreeSet<String>,
    pub transitions: Vec<Transition>,
    pub arcs: Vec<Arc>,
    pub activities: BTreeSet<String>,
    /// Activities observed to directly follow themselves in some trace.
    #[serde(default)]
    pub self_loop_activities: BTreeSet<String>,
}

pub const SOURCE_PLACE: &str = "p_source";
pub const SINK_PLACE: &str = "p_sink";

impl Gspn {
    pub fn transition(&self, name: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.name == name)
    }

    /// Transition carrying the given activity label.
    pub fn transition_for_activity(&self, activity: &str) -> Option<&Transition> {
        self.transitions
            .iter()
            .find(|t| t.label.as_deref() == Some(activity))
    }

    pub fn input_places(&self, transition: &str) -> Vec<&str> {
        let mut v: Vec<&str> = self
            .arcs
            .iter()
            .filter(|a| a.target == transition && self.places.contains(&a.source))
            .map(|a| a.source.as_str())
            .collect();
        v.sort_unstable();
        v
    }

    pub fn output_places(&self, transition: &str) -> Vec<&str> {
        let mut v: Vec<&str> = self
            .arcs
            .iter()
            .filter(|a| a.source == transition && self.places.contains(&a.target))
            .map(|a| a.target.as_str())
            .collect();
        v.sort_unstable();
        v
    }

    pub fn producers(&self, place: &str) -> Vec<&str> {
        let mut v: Vec<&str> = self
            .arcs
            .iter()
            .filter(|a| a.target == place)
            .map(|a| a.source.as_str())
            .collect();
        v.sort_unstable();
        v
    }

    pub fn consumers(&self, place: &str) -> Vec<&str> {
        let mut v: Vec<&str> = self
            .arcs
            .iter()
            .filter(|a| a.source == place)
            .map(|a| a.target.as_str())
            .collect();
        v.sort_unstable();
        v
    }

    /// Structural well-formedness: bipartite arcs with existing endpoints,
    /// weights at least one, visible labels drawn from the activity roster.
    pub fn validate(&self) -> Result<()> {
        let t_names: BTreeSet<&str> = self.transitions.iter().map(|t| t.name.as_str()).collect();
        if t_names.len() != self.transitions.len() {
            return Err(Error::Format("duplicate transition name".into()));
        }
        for t in &self.transitions {
            if self.places.contains(&t.name) {
                return Err(Error::Format(format!(
                    "id `{}` used for both a place and a transition",
                    t.name
                )));
            }
            if let Some(label) = &t.label {
                if !self.activities.contains(label) {
                    return Err(Error::Format(format!(
                        "transition `{}` labeled with unknown activity `{label}`",
                        t.name
                    )));
                }
            }
        }
        for a in &self.arcs {
            if a.weight < 1 {
                return Err(Error::Format(format!(
                    "arc {} -> {} has weight 0",
                    a.source, a.target
                )));
            }
            let s_place = self.places.contains(&a.source);
            let t_place = self.places.contains(&a.target);
            let s_trans = t_names.contains(a.source.as_str());
            let t_trans = t_names.contains(a.target.as_str());
            let ok = (s_place && t_trans) || (s_trans && t_place);
            if !ok {
                return Err(Error::Format(format!(
                    "arc {} -> {} must connect a place and a transition",
                    a.source, a.target
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: Gspn = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }
}

/// Pairwise footprint relation between two activities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Causal,
    CausalRev,
    Parallel,
    Choice,
}

/// Direct-succession and derived relations of a log's trace variants.
pub struct Footprint {
    pub activities: Vec<String>,
    pub succession: BTreeSet<(String, String)>,
    pub self_loops: BTreeSet<String>,
    pub starts: BTreeSet<String>,
    pub ends: BTreeSet<String>,
}

impl Footprint {
    pub fn from_log(log: &EventLog) -> Self {
        let mut succession = BTreeSet::new();
        let mut self_loops = BTreeSet::new();
        let mut starts = BTreeSet::new();
        let mut ends = BTreeSet::new();
        for (variant, _) in log.variants() {
            if let Some(first) = variant.first() {
                starts.insert(first.clone());
            }
            if let Some(last) = variant.last() {
                ends.insert(last.clone());
            }
            for pair in variant.windows(2) {
                if pair[0] == pair[1] {
                    self_loops.insert(pair[0].clone());
                } else {
                    succession.insert((pair[0].clone(), pair[1].clone()));
                }
            }
        }
        Footprint {
            activities: log.activities.iter().cloned().collect(),
            succession,
            self_loops,
            starts,
            ends,
        }
    }

    pub fn relation(&self, x: &str, y: &str) -> Relation {
        let xy = self.succession.contains(&(x.to_string(), y.to_string()));
        let yx = self.succession.contains(&(y.to_string(), x.to_string()));
        match (xy, yx) {
            (true, true) => Relation::Parallel,
            (true, false) => Relation::Causal,
            (false, true) => Relation::CausalRev,
            (false, false) => Relation::Choice,
        }
    }
}

fn place_name(inputs: &BTreeSet<String>, outputs: &BTreeSet<String>) -> String {
    format!(
        "p[{}]->[{}]",
        inputs.iter().cloned().collect::<Vec<_>>().join(","),
        outputs.iter().cloned().collect::<Vec<_>>().join(",")
    )
}

/// Discovers a net from the log's trace variants.
///
/// Deterministic for a given variant set; trace order does not matter.
pub fn alpha_discover(log: &EventLog) -> Result<Gspn> {
    if log.traces.is_empty() {
        return Err(Error::EmptyLog("cannot discover from an empty log".into()));
    }
    if log.activities.len() < 2 {
        return Err(Error::DegenerateNet(format!(
            "need at least 2 distinct activities, found {}",
            log.activities.len()
        )));
    }
    let fp = Footprint::from_log(log);

    // All maximal (X, Y) pairs with X -> Y causally and X, Y internally in
    // choice relation. Valid pairs are downward closed, so growing seeds one
    // element at a time reaches every maximal pair.
    let acts = &fp.activities;
    let causal = |x: &str, y: &str| fp.relation(x, y) == Relation::Causal;
    let choice = |x: &str, y: &str| x != y && fp.relation(x, y) == Relation::Choice;

    let mut maximal: BTreeSet<(BTreeSet<String>, BTreeSet<String>)> = BTreeSet::new();
    let mut stack: Vec<(BTreeSet<String>, BTreeSet<String>)> = Vec::new();
    let mut visited: BTreeSet<(BTreeSet<String>, BTreeSet<String>)> = BTreeSet::new();
    for x in acts {
        for y in acts {
            if causal(x, y) {
                let seed = (
                    BTreeSet::from([x.clone()]),
                    BTreeSet::from([y.clone()]),
                );
                if visited.insert(seed.clone()) {
                    stack.push(seed);
                }
            }
        }
    }
    while let Some((xs, ys)) = stack.pop() {
        let mut extended = false;
        for a in acts {
            // Try adding to X.
            if !xs.contains(a)
                && xs.iter().all(|x| choice(a, x))
                && ys.iter().all(|y| causal(a, y))
            {
                let mut nxs = xs.clone();
                nxs.insert(a.clone());
                let cand = (nxs, ys.clone());
                extended = true;
                if visited.insert(cand.clone()) {
                    stack.push(cand);
                }
            }
            // Try adding to Y.
            if !ys.contains(a)
                && ys.iter().all(|y| choice(a, y))
                && xs.iter().all(|x| causal(x, a))
            {
                let mut nys = ys.clone();
                nys.insert(a.clone());
                let cand = (xs.clone(), nys);
                extended = true;
                if visited.insert(cand.clone()) {
                    stack.push(cand);
                }
            }
        }
        if !extended {
            maximal.insert((xs, ys));
        }
    }

    let mut net = Gspn {
        places: BTreeSet::from([SOURCE_PLACE.to_string(), SINK_PLACE.to_string()]),
        transitions: log
            .activities
            .iter()
            .map(|a| Transition {
                name: a.clone(),
                label: Some(a.clone()),
            })
            .collect(),
        arcs: Vec::new(),
        activities: log.activities.clone(),
        self_loop_activities: fp.self_loops.clone(),
    };

    for (xs, ys) in &maximal {
        let p = place_name(xs, ys);
        net.places.insert(p.clone());
        for x in xs {
            net.arcs.push(Arc {
                source: x.clone(),
                target: p.clone(),
                weight: 1,
            });
        }
        for y in ys {
            net.arcs.push(Arc {
                source: p.clone(),
                target: y.clone(),
                weight: 1,
            });
        }
    }
    for s in &fp.starts {
        net.arcs.push(Arc {
            source: SOURCE_PLACE.to_string(),
            target: s.clone(),
            weight: 1,
        });
    }
    for e in &fp.ends {
        net.arcs.push(Arc {
            source: e.clone(),
            target: SINK_PLACE.to_string(),
            weight: 1,
        });
    }
    net.arcs.sort_by(|a, b| {
        (&a.source, &a.target).cmp(&(&b.source, &b.target))
    });
    net.validate()?;
    Ok(net)
}

/// Token-replays one activity sequence. Consecutive repeats of marked
/// self-loop activities collapse to a single firing first. Succeeds when
/// every firing is enabled and the final marking is exactly one token on the
/// sink place.
pub fn replay_variant(net: &Gspn, variant: &[String]) -> bool {
    let mut collapsed: Vec<&String> = Vec::with_capacity(variant.len());
    for act in variant {
        if net.self_loop_activities.contains(act) {
            if collapsed.last() == Some(&act) {
                continue;
            }
        }
        collapsed.push(act);
    }

    let mut marking: BTreeMap<&str, u32> = BTreeMap::new();
    marking.insert(SOURCE_PLACE, 1);
    for act in collapsed {
        let t = match net.transition_for_activity(act) {
            Some(t) => t,
            None => return false,
        };
        let inputs = net.input_places(&t.name);
        for p in &inputs {
            match marking.get_mut(*p) {
                Some(n) if *n > 0 => *n -= 1,
                _ => return false,
            }
        }
        for p in net.output_places(&t.name) {
            *marking.entry(p).or_insert(0) += 1;
        }
    }
    marking.retain(|_, n| *n > 0);
    marking.len() == 1 && marking.get(SINK_PLACE) == Some(&1)
}

/// Kind of a reducible substructure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FoldKind {
    Sequence,
    Or,
    SelfLoop,
}

impl FoldKind {
    pub fn token(self) -> &'static str {
        match self {
            FoldKind::Sequence => "seq",
            FoldKind::Or => "or",
            FoldKind::SelfLoop => "loop",
        }
    }
}

impl std::fmt::Display for FoldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FoldKind::Sequence => "Sequence",
            FoldKind::Or => "Or",
            FoldKind::SelfLoop => "SelfLoop",
        })
    }
}

/// One reducible substructure: its kind, ordered members and entry/exit
/// places.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldCandidate {
    pub kind: FoldKind,
    pub member_activities: Vec<String>,
    pub entry: String,
    pub exit: String,
}

impl FoldCandidate {
    pub fn activity_count(&self) -> usize {
        self.member_activities.len()
    }

    /// Stable identifier used for ordering and reports.
    pub fn id(&self) -> String {
        format!("{}:{}", self.kind.token(), self.member_activities.join("+"))
    }
}

/// Finds sequence chains: runs of visible single-input single-output
/// transitions joined by places with exactly one producer and one consumer.
fn sequence_chains(net: &Gspn, excluded: &BTreeSet<String>) -> Vec<FoldCandidate> {
    let eligible: Vec<&Transition> = net
        .transitions
        .iter()
        .filter(|t| {
            t.label.is_some()
                && !excluded.contains(t.label.as_deref().unwrap())
                && net.input_places(&t.name).len() == 1
                && net.output_places(&t.name).len() == 1
        })
        .collect();
    let names: BTreeSet<&str> = eligible.iter().map(|t| t.name.as_str()).collect();

    // t1 => t2 when t1's only output place feeds exactly t2 and nothing else.
    let mut next: BTreeMap<&str, &str> = BTreeMap::new();
    for t in &eligible {
        let p = net.output_places(&t.name)[0];
        if p == SINK_PLACE {
            continue;
        }
        let producers = net.producers(p);
        let consumers = net.consumers(p);
        if producers.len() == 1 && consumers.len() == 1 && names.contains(consumers[0]) {
            next.insert(t.name.as_str(), consumers[0]);
        }
    }
    let successors: BTreeSet<&str> = next.values().copied().collect();

    let mut chains = Vec::new();
    for t in &eligible {
        let name = t.name.as_str();
        if successors.contains(name) || !next.contains_key(name) {
            continue; // not a chain head
        }
        let mut chain = vec![name];
        let mut cur = name;
        let mut seen: BTreeSet<&str> = BTreeSet::from([name]);
        while let Some(&nxt) = next.get(cur) {
            if !seen.insert(nxt) {
                break; // guard against structural cycles
            }
            chain.push(nxt);
            cur = nxt;
        }
        if chain.len() >= 2 {
            let entry = net.input_places(chain[0])[0].to_string();
            let exit = net.output_places(chain[chain.len() - 1])[0].to_string();
            chains.push(FoldCandidate {
                kind: FoldKind::Sequence,
                member_activities: chain
                    .iter()
                    .map(|n| net.transition(n).unwrap().label.clone().unwrap())
                    .collect(),
                entry,
                exit,
            });
        }
    }
    chains
}

/// Finds or-groups: two or more visible transitions sharing the same single
/// entry place and the same single exit place.
fn or_groups(net: &Gspn, excluded: &BTreeSet<String>) -> Vec<FoldCandidate> {
    let mut groups: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    for t in &net.transitions {
        let label = match &t.label {
            Some(l) if !excluded.contains(l) => l.clone(),
            _ => continue,
        };
        let inputs = net.input_places(&t.name);
        let outputs = net.output_places(&t.name);
        if inputs.len() == 1 && outputs.len() == 1 {
            groups
                .entry((inputs[0].to_string(), outputs[0].to_string()))
                .or_default()
                .push(label);
        }
    }
    groups
        .into_iter()
        .filter(|(_, members)| members.len() >= 2)
        .map(|((entry, exit), mut members)| {
            members.sort_unstable();
            FoldCandidate {
                kind: FoldKind::Or,
                member_activities: members,
                entry,
                exit,
            }
        })
        .collect()
}

/// Returns all maximal fold candidates whose members avoid `protected`,
/// mutually non-overlapping (largest first wins), ordered by entry place.
pub fn detect_substructures(net: &Gspn, protected: &BTreeSet<String>) -> Vec<FoldCandidate> {
    // Self-loop activities stand alone: their repetition disqualifies them
    // from sequence and or membership.
    let mut excluded: BTreeSet<String> = protected.clone();
    excluded.extend(net.self_loop_activities.iter().cloned());

    let mut candidates: Vec<FoldCandidate> = Vec::new();

    // Sequences, already split at excluded members by construction.
    candidates.extend(sequence_chains(net, &excluded));

    // Or groups keep their unprotected members when at least two remain.
    candidates.extend(or_groups(net, &excluded));

    // Self-loops.
    for act in &net.self_loop_activities {
        if protected.contains(act) {
            continue;
        }
        if let Some(t) = net.transition_for_activity(act) {
            let entry = net
                .input_places(&t.name)
                .first()
                .map(|s| s.to_string())
                .unwrap_or_default();
            let exit = net
                .output_places(&t.name)
                .first()
                .map(|s| s.to_string())
                .unwrap_or_else(|| entry.clone());
            candidates.push(FoldCandidate {
                kind: FoldKind::SelfLoop,
                member_activities: vec![act.clone()],
                entry,
                exit,
            });
        }
    }

    // Greedy overlap resolution: larger candidates first, ties by entry
    // place then id.
    candidates.sort_by(|a, b| {
        b.activity_count()
            .cmp(&a.activity_count())
            .then_with(|| a.entry.cmp(&b.entry))
            .then_with(|| a.id().cmp(&b.id()))
    });
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut selected: Vec<FoldCandidate> = Vec::new();
    for cand in candidates {
        if cand
            .member_activities
            .iter()
            .any(|m| taken.contains(m))
        {
            continue;
        }
        taken.extend(cand.member_activities.iter().cloned());
        selected.push(cand);
    }
    selected.sort_by(|a, b| a.entry.cmp(&b.entry).then_with(|| a.id().cmp(&b.id())));
    selected
}
