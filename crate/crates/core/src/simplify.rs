//! Folding of sequence / or / self-loop substructures in the log and the net.
//!
//! Events carry timestamps only, so replacing a run by its last event makes
//! the new event's derived execution time exactly the sum of the run's
//! member times, and the trace's total duration never changes. Or-folds
//! relabel the chosen branch event and report the pooled mean delay
//! separately; overwriting per-trace durations with the pooled value is
//! available behind a flag for sensitivity studies.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::discovery::{Arc, FoldCandidate, FoldKind, Gspn, Transition};
use crate::error::{Error, Result};
use crate::eventlog::{execution_times, Event, EventLog, Trace};

/// How the folded activity's delay relates to its members' delays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DelayRule {
    /// New delay is the sum of the member delays in the run.
    SumOfMembers,
    /// Per-trace delay kept; the pooled frequency-weighted mean is reported.
    FrequencyWeightedMean,
    /// Delay of m consecutive iterations collapses to their sum.
    RunSum,
}

impl DelayRule {
    pub fn for_kind(kind: FoldKind) -> Self {
        match kind {
            FoldKind::Sequence => DelayRule::SumOfMembers,
            FoldKind::Or => DelayRule::FrequencyWeightedMean,
            FoldKind::SelfLoop => DelayRule::RunSum,
        }
    }
}

/// A fresh activity introduced by one applied fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldedActivity {
    pub label: String,
    pub kind: FoldKind,
    pub replaced: Vec<String>,
    pub delay_rule: DelayRule,
    /// Pooled mean delay in seconds; set for or-folds.
    pub pooled_delay: Option<f64>,
}

/// Replaces every contiguous occurrence of the candidate's member sequence
/// by a single event carrying the run's last timestamp and resource.
/// Traces without the run pass through unchanged.
///
/// A run starting the trace keeps the run's first timestamp instead: the
/// head event's execution time is 0 by convention, so anchoring there leaves
/// the trace span and every downstream remaining time untouched.
pub fn fold_sequence(trace: &Trace, cand: &FoldCandidate, label: &str) -> Trace {
    let members = &cand.member_activities;
    if members.len() < 2 || trace.events.len() < members.len() {
        return trace.clone();
    }
    let mut out: Vec<Event> = Vec::with_capacity(trace.events.len());
    let mut i = 0;
    while i < trace.events.len() {
        let matches_run = i + members.len() <= trace.events.len()
            && members
                .iter()
                .enumerate()
                .all(|(j, m)| trace.events[i + j].activity == *m);
        if matches_run {
            let last = &trace.events[i + members.len() - 1];
            let mut folded = last.clone();
            folded.activity = label.to_string();
            if i == 0 {
                folded.timestamp = trace.events[0].timestamp;
            }
            out.push(folded);
            i += members.len();
        } else {
            out.push(trace.events[i].clone());
            i += 1;
        }
    }
    Trace {
        case_id: trace.case_id.clone(),
        events: out,
    }
}

/// Collapses each maximal run of the member activity to one event at the
/// run's last timestamp. As with sequence folds, a run starting the trace
/// keeps the trace's first timestamp so the span is preserved.
pub fn fold_self_loop(trace: &Trace, cand: &FoldCandidate, label: &str) -> Trace {
    let member = match cand.member_activities.first() {
        Some(m) => m,
        None => return trace.clone(),
    };
    let mut out: Vec<Event> = Vec::with_capacity(trace.events.len());
    let mut i = 0;
    while i < trace.events.len() {
        if trace.events[i].activity == *member {
            let mut j = i;
            while j + 1 < trace.events.len() && trace.events[j + 1].activity == *member {
                j += 1;
            }
            let mut folded = trace.events[j].clone();
            folded.activity = label.to_string();
            if i == 0 {
                folded.timestamp = trace.events[0].timestamp;
            }
            out.push(folded);
            i = j + 1;
        } else {
            out.push(trace.events[i].clone());
            i += 1;
        }
    }
    Trace {
        case_id: trace.case_id.clone(),
        events: out,
    }
}

/// Relabels the chosen branch in every trace containing exactly one member
/// event, and returns the pooled delay: the mean of those events' execution
/// times across the matching traces.
pub fn fold_or(
    log: &EventLog,
    cand: &FoldCandidate,
    label: &str,
    overwrite_pooled: bool,
) -> Result<(EventLog, f64)> {
    let members: BTreeSet<&str> = cand.member_activities.iter().map(|s| s.as_str()).collect();

    // First pass: find per-trace single-member positions and durations.
    let mut hits: Vec<Option<(usize, u64)>> = Vec::with_capacity(log.traces.len());
    let mut total = 0.0;
    let mut n = 0usize;
    for trace in &log.traces {
        let positions: Vec<usize> = trace
            .events
            .iter()
            .enumerate()
            .filter(|(_, e)| members.contains(e.activity.as_str()))
            .map(|(i, _)| i)
            .collect();
        if positions.len() == 1 {
            let idx = positions[0];
            let dur = execution_times(trace)[idx].1.seconds();
            total += dur as f64;
            n += 1;
            hits.push(Some((idx, dur)));
        } else {
            hits.push(None);
        }
    }
    if n == 0 {
        return Err(Error::NotApplicable(format!(
            "no trace contains exactly one of {:?}",
            cand.member_activities
        )));
    }
    let delay = total / n as f64;

    let traces = log
        .traces
        .iter()
        .zip(hits)
        .map(|(trace, hit)| match hit {
            None => trace.clone(),
            Some((idx, _)) => {
                let mut events = trace.events.clone();
                events[idx].activity = label.to_string();
                if overwrite_pooled {
                    // Shift this event to sit the pooled delay after its
                    // predecessor; later timestamps absorb the difference.
                    let prev = if idx == 0 {
                        events[0].timestamp
                    } else {
                        events[idx - 1].timestamp
                    };
                    let shifted = prev + delay.round() as i64;
                    events[idx].timestamp = shifted.min(
                        events
                            .get(idx + 1)
                            .map(|e| e.timestamp)
                            .unwrap_or(i64::MAX),
                    );
                }
                Trace {
                    case_id: trace.case_id.clone(),
                    events,
                }
            }
        })
        .collect();
    Ok((EventLog::from_traces(traces)?, delay))
}

/// Picks fresh labels `FOLD_<kind>_<n>` avoiding the given roster.
fn mint_label(kind: FoldKind, used: &mut BTreeSet<String>, counter: &mut usize) -> String {
    loop {
        *counter += 1;
        let label = format!("FOLD_{}_{}", kind.token(), counter);
        if used.insert(label.clone()) {
            return label;
        }
    }
}

/// Rewrites the net: the candidate's member transitions and interior places
/// collapse into one visible transition between entry and exit. Nets that no
/// longer contain the members are left untouched.
fn rewrite_net(net: &mut Gspn, cand: &FoldCandidate, label: &str) -> bool {
    let member_transitions: Vec<String> = cand
        .member_activities
        .iter()
        .filter_map(|a| net.transition_for_activity(a).map(|t| t.name.clone()))
        .collect();
    if member_transitions.len() != cand.member_activities.len() {
        return false;
    }

    // Interior places of a sequence: each joins two consecutive members.
    let mut dead_places: BTreeSet<String> = BTreeSet::new();
    if cand.kind == FoldKind::Sequence {
        for pair in member_transitions.windows(2) {
            for p in net.output_places(&pair[0]) {
                if net.input_places(&pair[1]).contains(&p) {
                    dead_places.insert(p.to_string());
                }
            }
        }
    }

    let dead_transitions: BTreeSet<&String> = member_transitions.iter().collect();
    net.arcs.retain(|a| {
        !dead_transitions.contains(&a.source)
            && !dead_transitions.contains(&a.target)
            && !dead_places.contains(&a.source)
            && !dead_places.contains(&a.target)
    });
    net.transitions
        .retain(|t| !dead_transitions.contains(&t.name));
    net.places.retain(|p| !dead_places.contains(p));

    net.transitions.push(Transition {
        name: label.to_string(),
        label: Some(label.to_string()),
    });
    if net.places.contains(&cand.entry) {
        net.arcs.push(Arc {
            source: cand.entry.clone(),
            target: label.to_string(),
            weight: 1,
        });
    }
    if net.places.contains(&cand.exit) {
        net.arcs.push(Arc {
            source: label.to_string(),
            target: cand.exit.clone(),
            weight: 1,
        });
    }
    for a in &cand.member_activities {
        net.activities.remove(a);
        net.self_loop_activities.remove(a);
    }
    net.activities.insert(label.to_string());
    net.arcs
        .sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
    true
}

/// Applies every accepted fold to the log and the net. Candidates must be
/// pairwise activity-disjoint. Candidates that match nothing are skipped.
pub fn simplify_log(
    log: &EventLog,
    net: &Gspn,
    accepted: &[FoldCandidate],
) -> Result<(EventLog, Gspn, Vec<FoldedActivity>)> {
    simplify_log_with(log, net, accepted, false)
}

/// [`simplify_log`] with the or-fold pooled-overwrite flag exposed.
pub fn simplify_log_with(
    log: &EventLog,
    net: &Gspn,
    accepted: &[FoldCandidate],
    or_overwrite_pooled: bool,
) -> Result<(EventLog, Gspn, Vec<FoldedActivity>)> {
    let mut seen: BTreeSet<&String> = BTreeSet::new();
    for cand in accepted {
        for m in &cand.member_activities {
            if !seen.insert(m) {
                return Err(Error::Argument(format!(
                    "candidates overlap on activity `{m}`"
                )));
            }
        }
    }

    let mut out_log = log.clone();
    let mut out_net = net.clone();
    let mut folded: Vec<FoldedActivity> = Vec::new();
    let mut used: BTreeSet<String> = log.activities.clone();
    let mut counters: std::collections::BTreeMap<&'static str, usize> = Default::default();

    for cand in accepted {
        let counter = counters.entry(cand.kind.token()).or_insert(0);
        let label = mint_label(cand.kind, &mut used, counter);

        let mut applied_log = false;
        let mut pooled_delay = None;
        match cand.kind {
            FoldKind::Sequence => {
                let traces: Vec<Trace> = out_log
                    .traces
                    .iter()
                    .map(|t| fold_sequence(t, cand, &label))
                    .collect();
                applied_log = traces != out_log.traces;
                out_log = EventLog::from_traces(traces)?;
            }
            FoldKind::SelfLoop => {
                let traces: Vec<Trace> = out_log
                    .traces
                    .iter()
                    .map(|t| fold_self_loop(t, cand, &label))
                    .collect();
                applied_log = traces != out_log.traces;
                out_log = EventLog::from_traces(traces)?;
            }
            FoldKind::Or => match fold_or(&out_log, cand, &label, or_overwrite_pooled) {
                Ok((new_log, delay)) => {
                    applied_log = true;
                    pooled_delay = Some(delay);
                    out_log = new_log;
                }
                Err(Error::NotApplicable(_)) => {}
                Err(e) => return Err(e),
            },
        }
        let applied_net = rewrite_net(&mut out_net, cand, &label);

        if applied_log || applied_net {
            folded.push(FoldedActivity {
                label,
                kind: cand.kind,
                replaced: cand.member_activities.clone(),
                delay_rule: DelayRule::for_kind(cand.kind),
                pooled_delay,
            });
        }
    }
    Ok((out_log, out_net, folded))
}
