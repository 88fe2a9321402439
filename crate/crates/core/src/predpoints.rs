//! Prediction point selection: one representative activity per resource
//! community, chosen as a system of distinct representatives.
//!
//! Matching is Kuhn's augmenting-path algorithm with lexicographic activity
//! order and communities processed smallest-set-first, so the result is
//! deterministic. When no full SDR exists the maximum matching is returned
//! and the unmatched communities are flagged rather than failing the run.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::community::ResourceCommunityNetwork;
use crate::error::{Error, Result};
use crate::eventlog::EventLog;

/// The selected prediction points and which community each one represents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionPointSet {
    pub points: BTreeSet<String>,
    /// activity -> community index it represents.
    pub provenance: BTreeMap<String, usize>,
    /// Communities left without a representative.
    pub uncovered: Vec<usize>,
}

impl PredictionPointSet {
    /// A hand-picked point list, bypassing selection.
    pub fn from_labels(labels: &[String]) -> Self {
        PredictionPointSet {
            points: labels.iter().cloned().collect(),
            provenance: BTreeMap::new(),
            uncovered: Vec::new(),
        }
    }
}

/// Activities performed by each community's members, in community order.
/// Every performer in the community network must appear in the log.
pub fn community_activity_sets(
    log: &EventLog,
    rcn: &ResourceCommunityNetwork,
) -> Result<Vec<BTreeSet<String>>> {
    let mut by_resource: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for trace in &log.traces {
        for e in &trace.events {
            by_resource
                .entry(e.resource.as_str())
                .or_default()
                .insert(e.activity.clone());
        }
    }
    let mut sets = Vec::with_capacity(rcn.communities.len());
    for community in &rcn.communities {
        let mut acts = BTreeSet::new();
        for member in &community.members {
            match by_resource.get(member.as_str()) {
                Some(a) => acts.extend(a.iter().cloned()),
                None => {
                    return Err(Error::Consistency(format!(
                        "performer `{member}` of community {} never appears in the log",
                        community.id
                    )))
                }
            }
        }
        sets.push(acts);
    }
    Ok(sets)
}

/// Augmenting path search: community -> activity assignments in
/// `matched_to`, activities tried in ascending order.
fn try_assign(
    community: usize,
    sets: &[Vec<String>],
    matched_to: &mut BTreeMap<String, usize>,
    visited: &mut BTreeSet<String>,
) -> bool {
    for act in &sets[community] {
        if visited.contains(act) {
            continue;
        }
        visited.insert(act.clone());
        let holder = matched_to.get(act).copied();
        match holder {
            None => {
                matched_to.insert(act.clone(), community);
                return true;
            }
            Some(other) => {
                if try_assign(other, sets, matched_to, visited) {
                    matched_to.insert(act.clone(), community);
                    return true;
                }
            }
        }
    }
    false
}

/// Selects distinct representatives: one activity per community where a
/// matching exists. Communities are processed in ascending set-size order
/// (ties by index); within a community the lexicographically smallest
/// available activity wins.
pub fn select_prediction_points(sets: &[BTreeSet<String>]) -> Result<PredictionPointSet> {
    if sets.iter().all(|s| s.is_empty()) {
        return Err(Error::Selection(
            "all community activity sets are empty".into(),
        ));
    }
    let ordered_sets: Vec<Vec<String>> = sets
        .iter()
        .map(|s| s.iter().cloned().collect())
        .collect();
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by_key(|&i| (sets[i].len(), i));

    let mut matched_to: BTreeMap<String, usize> = BTreeMap::new();
    let mut uncovered = Vec::new();
    for &c in &order {
        if sets[c].is_empty() {
            uncovered.push(c);
            continue;
        }
        let mut visited = BTreeSet::new();
        if !try_assign(c, &ordered_sets, &mut matched_to, &mut visited) {
            uncovered.push(c);
        }
    }
    uncovered.sort_unstable();

    let mut points = BTreeSet::new();
    let mut provenance = BTreeMap::new();
    for (act, c) in matched_to {
        points.insert(act.clone());
        provenance.insert(act, c);
    }
    Ok(PredictionPointSet {
        points,
        provenance,
        uncovered,
    })
}

/// Repeated selection rounds for more than one point per community. Each
/// round excludes activities already chosen; rounds that add nothing stop
/// the process early.
pub fn select_prediction_points_multi(
    sets: &[BTreeSet<String>],
    per_community: usize,
) -> Result<PredictionPointSet> {
    let mut result = select_prediction_points(sets)?;
    for _ in 1..per_community {
        let reduced: Vec<BTreeSet<String>> = sets
            .iter()
            .map(|s| s.difference(&result.points).cloned().collect())
            .collect();
        if reduced.iter().all(|s: &BTreeSet<String>| s.is_empty()) {
            break;
        }
        let round = select_prediction_points(&reduced)?;
        let before = result.points.len();
        for (act, c) in round.provenance {
            result.points.insert(act.clone());
            result.provenance.entry(act).or_insert(c);
        }
        if result.points.len() == before {
            break;
        }
    }
    // Uncovered is only meaningful for the base round.
    Ok(result)
}

/// Checks that `points` can serve as a full SDR over `sets`: a perfect
/// matching between the given activities and the communities.
pub fn is_valid_sdr(sets: &[BTreeSet<String>], points: &BTreeSet<String>) -> bool {
    if points.len() != sets.len() {
        return false;
    }
    // Match each community to one of the given points.
    let restricted: Vec<Vec<String>> = sets
        .iter()
        .map(|s| s.intersection(points).cloned().collect())
        .collect();
    let mut matched_to: BTreeMap<String, usize> = BTreeMap::new();
    for c in 0..restricted.len() {
        let mut visited = BTreeSet::new();
        if !try_assign(c, &restricted, &mut matched_to, &mut visited) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::community::{build_rcn, Partition};
    use crate::socialnet::SocialNetwork;
    use crate::testutil::table1_log;

    fn sets_of(raw: &[&[&str]]) -> Vec<BTreeSet<String>> {
        raw.iter()
            .map(|s| s.iter().map(|a| a.to_string()).collect())
            .collect()
    }

    /// Exhaustive maximum matching size, for cross-checking.
    fn brute_force_max_matching(sets: &[BTreeSet<String>]) -> usize {
        let all: Vec<String> = {
            let mut v: BTreeSet<String> = BTreeSet::new();
            for s in sets {
                v.extend(s.iter().cloned());
            }
            v.into_iter().collect()
        };
        fn rec(
            sets: &[BTreeSet<String>],
            all: &[String],
            c: usize,
            used: &mut Vec<bool>,
        ) -> usize {
            if c == sets.len() {
                return 0;
            }
            // Skip this community.
            let mut best = rec(sets, all, c + 1, used);
            for (i, act) in all.iter().enumerate() {
                if !used[i] && sets[c].contains(act) {
                    used[i] = true;
                    best = best.max(1 + rec(sets, all, c + 1, used));
                    used[i] = false;
                }
            }
            best
        }
        let mut used = vec![false; all.len()];
        rec(sets, &all, 0, &mut used)
    }

    #[test]
    fn table1_community_activity_sets() {
        let log = table1_log();
        // Communities fixed to the worked-example grouping, using the
        // performer names as they appear in the log.
        let mut net = SocialNetwork::new();
        for name in ["John", "Sue", "Mike", "Carol", "Pete", "Clare"] {
            net.add_node(name);
        }
        net.add_edge("John", "Sue", 1.0).unwrap();
        net.add_edge("Mike", "Carol", 1.0).unwrap();
        net.add_edge("Pete", "Clare", 1.0).unwrap();
        let part = Partition::of_groups(&[vec![0, 1], vec![4, 5], vec![2, 3]], 6).unwrap();
        let rcn = build_rcn(&net, &part);
        let sets = community_activity_sets(&log, &rcn).unwrap();
        // Communities come out in node order: {John,Sue}, {Mike,Carol},
        // {Pete,Clare}.
        assert_eq!(sets[0], sets_of(&[&["A", "B", "C"]])[0]);
        assert_eq!(sets[1], sets_of(&[&["B", "C"]])[0]);
        assert_eq!(sets[2], sets_of(&[&["D", "E"]])[0]);
    }

    #[test]
    fn absent_performer_is_a_consistency_error() {
        let log = table1_log();
        let mut net = SocialNetwork::new();
        net.add_edge("John", "Ghost", 1.0).unwrap();
        let part = Partition::singletons(2);
        let rcn = build_rcn(&net, &part);
        assert!(matches!(
            community_activity_sets(&log, &rcn),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn worked_example_selection() {
        let sets = sets_of(&[&["A", "B", "C"], &["D", "E"], &["B", "C"]]);
        let got = select_prediction_points(&sets).unwrap();
        assert!(got.uncovered.is_empty());
        assert!(is_valid_sdr(&sets, &got.points));
        // Deterministic pick: {D,E} first (smallest index among size-2) -> D,
        // {B,C} -> B, {A,B,C} -> A.
        let expect: BTreeSet<String> =
            ["A", "B", "D"].iter().map(|s| s.to_string()).collect();
        assert_eq!(got.points, expect);
        assert_eq!(got.provenance.get("D"), Some(&1));
        assert_eq!(got.provenance.get("B"), Some(&2));
        assert_eq!(got.provenance.get("A"), Some(&0));
        // The published alternative is also a valid SDR.
        let alt: BTreeSet<String> = ["A", "D", "C"].iter().map(|s| s.to_string()).collect();
        assert!(is_valid_sdr(&sets, &alt));
    }

    #[test]
    fn single_set_single_point() {
        let sets = sets_of(&[&["X"]]);
        let got = select_prediction_points(&sets).unwrap();
        assert_eq!(got.points.len(), 1);
        assert!(got.points.contains("X"));
    }

    #[test]
    fn duplicate_singletons_leave_one_uncovered() {
        let sets = sets_of(&[&["X"], &["X"]]);
        let got = select_prediction_points(&sets).unwrap();
        assert_eq!(got.points.len(), 1);
        assert_eq!(got.uncovered, vec![1]);
    }

    #[test]
    fn all_empty_sets_error() {
        let sets = sets_of(&[&[], &[]]);
        assert!(matches!(
            select_prediction_points(&sets),
            Err(Error::Selection(_))
        ));
    }

    #[test]
    fn empty_set_flagged_uncovered() {
        let sets = sets_of(&[&[], &["X"]]);
        let got = select_prediction_points(&sets).unwrap();
        assert_eq!(got.uncovered, vec![0]);
        assert!(got.points.contains("X"));
    }

    #[test]
    fn augmentation_finds_full_sdr() {
        // Greedy without augmentation would strand the last community.
        let sets = sets_of(&[&["A"], &["A", "B"], &["B", "C"]]);
        let got = select_prediction_points(&sets).unwrap();
        assert!(got.uncovered.is_empty());
        assert!(is_valid_sdr(&sets, &got.points));
    }

    #[test]
    fn matching_size_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let alphabet = ["a", "b", "c", "d", "e", "f", "g", "h"];
        for _ in 0..200 {
            let n = rng.gen_range(1..=6);
            let sets: Vec<BTreeSet<String>> = (0..n)
                .map(|_| {
                    let k = rng.gen_range(0..=4);
                    (0..k)
                        .map(|_| alphabet[rng.gen_range(0..alphabet.len())].to_string())
                        .collect()
                })
                .collect();
            if sets.iter().all(|s| s.is_empty()) {
                continue;
            }
            let got = select_prediction_points(&sets).unwrap();
            let matched = sets.len() - got.uncovered.len();
            assert_eq!(matched, brute_force_max_matching(&sets));
            // Representatives really are distinct and drawn from their sets.
            for (act, c) in &got.provenance {
                assert!(sets[*c].contains(act));
            }
        }
    }

    #[test]
    fn multiplicity_adds_points() {
        let sets = sets_of(&[&["A", "B"], &["C", "D"]]);
        let got = select_prediction_points_multi(&sets, 2).unwrap();
        assert_eq!(got.points.len(), 4);
        let one = select_prediction_points_multi(&sets, 1).unwrap();
        assert_eq!(one.points.len(), 2);
    }

    #[test]
    fn sdr_checker_rejects_bad_sets() {
        let sets = sets_of(&[&["A", "B", "C"], &["D", "E"], &["B", "C"]]);
        let wrong_size: BTreeSet<String> = ["A", "D"].iter().map(|s| s.to_string()).collect();
        assert!(!is_valid_sdr(&sets, &wrong_size));
        let not_member: BTreeSet<String> =
            ["A", "D", "Z"].iter().map(|s| s.to_string()).collect();
        assert!(!is_valid_sdr(&sets, &not_member));
        let unmatched: BTreeSet<String> =
            ["D", "E", "A"].iter().map(|s| s.to_string()).collect();
        // D and E both come from community 1 only; community 2 gets nothing.
        assert!(!is_valid_sdr(&sets, &unmatched));
    }
}
