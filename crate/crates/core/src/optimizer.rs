//! Deviation measurement per fold candidate and the budgeted 0/1 knapsack
//! that decides which folds to accept.
//!
//! Each candidate is assessed by training one model on the untouched train
//! log and one on the train log with only that candidate folded, comparing
//! their MAE on the correspondingly folded test log. The knapsack maximises
//! the number of folded activities subject to the summed deviations staying
//! within `g * gamma`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::discovery::{FoldCandidate, Gspn};
use crate::error::{Error, Result};
use crate::eventlog::{temporal_split, EventLog};
use crate::predictor::{evaluate_point, TrainConfig};
use crate::predpoints::PredictionPointSet;
use crate::simplify::{simplify_log_with, FoldedActivity};

/// Deviation budget: the knapsack capacity is `g * gamma` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Expected deviation between predicted and actual values, in seconds.
    pub gamma: f64,
    /// Slack multiplier. Zero forbids any fold with a positive deviation.
    pub g: f64,
}

impl Budget {
    pub fn new(gamma: f64, g: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Argument(format!(
                "budget gamma must be positive, got {gamma}"
            )));
        }
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::Argument(format!(
                "budget slack g must be non-negative, got {g}"
            )));
        }
        Ok(Budget { gamma, g })
    }

    pub fn capacity(&self) -> f64 {
        self.g * self.gamma
    }
}

/// MAE of the original and the candidate-folded pipeline at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMae {
    pub point: String,
    pub original: f64,
    pub folded: f64,
}

/// One candidate's measured cost and the knapsack decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateAssessment {
    pub candidate: FoldCandidate,
    /// Number of activities the fold removes from the roster.
    pub k: usize,
    /// Worst-case absolute MAE difference across the assessed points.
    pub mu: f64,
    pub per_point: Vec<PointMae>,
    /// Knapsack decision; unset until solved.
    pub selected: bool,
}

impl CandidateAssessment {
    pub fn id(&self) -> String {
        self.candidate.id()
    }
}

/// Assesses one candidate at one point. The deviation is the absolute MAE
/// difference between the folded and original pipelines.
pub fn assess_candidate(
    train: &EventLog,
    test: &EventLog,
    net: &Gspn,
    cand: &FoldCandidate,
    point: &str,
    cfg: &TrainConfig,
) -> Result<CandidateAssessment> {
    if cand.member_activities.iter().any(|m| m == point) {
        return Err(Error::ProtectionViolation(format!(
            "prediction point `{point}` is a member of candidate {}",
            cand.id()
        )));
    }
    let original = evaluate_point(train, test, point, cfg)?;
    let folded = assess_folded_mae(train, test, net, cand, point, cfg)?;
    let mu = (folded - original).abs();
    Ok(CandidateAssessment {
        candidate: cand.clone(),
        k: cand.activity_count(),
        mu,
        per_point: vec![PointMae {
            point: point.to_string(),
            original,
            folded,
        }],
        selected: false,
    })
}

fn assess_folded_mae(
    train: &EventLog,
    test: &EventLog,
    net: &Gspn,
    cand: &FoldCandidate,
    point: &str,
    cfg: &TrainConfig,
) -> Result<f64> {
    let accepted = std::slice::from_ref(cand);
    let (folded_train, _, _) = simplify_log_with(train, net, accepted, false)?;
    let (folded_test, _, _) = simplify_log_with(test, net, accepted, false)?;
    if !folded_train.activities.contains(point) || !folded_test.activities.contains(point) {
        return Err(Error::ProtectionViolation(format!(
            "prediction point `{point}` vanished when folding {}",
            cand.id()
        )));
    }
    evaluate_point(&folded_train, &folded_test, point, cfg)
}

/// Assesses every candidate at every point, taking the worst-case deviation
/// per candidate. The original model per point is trained once.
pub fn assess_candidates(
    train: &EventLog,
    test: &EventLog,
    net: &Gspn,
    candidates: &[FoldCandidate],
    points: &[String],
    cfg: &TrainConfig,
) -> Result<(Vec<CandidateAssessment>, BTreeMap<String, f64>)> {
    let mut original_mae = BTreeMap::new();
    for point in points {
        original_mae.insert(point.clone(), evaluate_point(train, test, point, cfg)?);
    }
    let mut out = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let mut per_point = Vec::with_capacity(points.len());
        let mut mu = 0.0_f64;
        for point in points {
            if cand.member_activities.iter().any(|m| m == point) {
                return Err(Error::ProtectionViolation(format!(
                    "prediction point `{point}` is a member of candidate {}",
                    cand.id()
                )));
            }
            let original = original_mae[point];
            let folded = assess_folded_mae(train, test, net, cand, point, cfg)?;
            mu = mu.max((folded - original).abs());
            per_point.push(PointMae {
                point: point.clone(),
                original,
                folded,
            });
        }
        out.push(CandidateAssessment {
            candidate: cand.clone(),
            k: cand.activity_count(),
            mu,
            per_point,
            selected: false,
        });
    }
    Ok((out, original_mae))
}

/// Selection value for comparisons: higher total k wins, then lower exact
/// deviation sum, then the lexicographically smaller index set.
fn better(
    a: (u64, f64, &Vec<usize>),
    b: (u64, f64, &Vec<usize>),
) -> bool {
    if a.0 != b.0 {
        return a.0 > b.0;
    }
    if (a.1 - b.1).abs() > 1e-12 {
        return a.1 < b.1;
    }
    a.2 < b.2
}

fn exhaustive_best(ks: &[u64], mus: &[f64], capacity: f64) -> Vec<usize> {
    let n = ks.len();
    let mut best: (u64, f64, Vec<usize>) = (0, 0.0, Vec::new());
    let mut chosen: Vec<usize> = Vec::new();
    // Suffix sums of k for pruning.
    let mut suffix = vec![0u64; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + ks[i];
    }
    fn rec(
        i: usize,
        k_sum: u64,
        mu_sum: f64,
        ks: &[u64],
        mus: &[f64],
        capacity: f64,
        suffix: &[u64],
        chosen: &mut Vec<usize>,
        best: &mut (u64, f64, Vec<usize>),
    ) {
        if k_sum + suffix[i] < best.0 {
            return; // cannot beat the incumbent
        }
        if i == ks.len() {
            let cand = (k_sum, mu_sum, &*chosen);
            if better(cand, (best.0, best.1, &best.2)) {
                *best = (k_sum, mu_sum, chosen.clone());
            }
            return;
        }
        // Take first so equally-valued selections prefer earlier ids.
        if mu_sum + mus[i] <= capacity {
            chosen.push(i);
            rec(i + 1, k_sum + ks[i], mu_sum + mus[i], ks, mus, capacity, suffix, chosen, best);
            chosen.pop();
        }
        rec(i + 1, k_sum, mu_sum, ks, mus, capacity, suffix, chosen, best);
    }
    rec(0, 0, 0.0, ks, mus, capacity, &suffix, &mut chosen, &mut best);
    best.2
}

fn dp_best(ks: &[u64], mus: &[f64], capacity: f64) -> Vec<usize> {
    // Conservative 1-second discretisation: weights round up, capacity
    // rounds down, so the exact sum can never exceed the budget.
    let weights: Vec<u64> = mus.iter().map(|m| m.ceil() as u64).collect();
    let total_w: u64 = weights.iter().sum();
    let cap = (capacity.floor() as u64).min(total_w);

    #[derive(Clone)]
    struct Cell {
        k: u64,
        mu: f64,
        picks: Vec<usize>,
    }
    // Every cell starts as the empty selection, so dp[c] always holds the
    // best selection with rounded weight at most c.
    let empty = Cell {
        k: 0,
        mu: 0.0,
        picks: Vec::new(),
    };
    let mut dp: Vec<Cell> = vec![empty; cap as usize + 1];
    for (i, (&w, &mu)) in weights.iter().zip(mus).enumerate() {
        for c in (0..=cap).rev() {
            if w > c {
                break;
            }
            let from = &dp[(c - w) as usize];
            let cand_k = from.k + ks[i];
            let cand_mu = from.mu + mu;
            let mut cand_picks = from.picks.clone();
            cand_picks.push(i);
            let cur = &dp[c as usize];
            if better(
                (cand_k, cand_mu, &cand_picks),
                (cur.k, cur.mu, &cur.picks),
            ) {
                dp[c as usize] = Cell {
                    k: cand_k,
                    mu: cand_mu,
                    picks: cand_picks,
                };
            }
        }
    }
    let last = &dp[cap as usize];
    last.picks.clone()
}

/// Solves the fold-selection knapsack exactly: maximise the summed activity
/// counts subject to the summed deviations staying within the budget.
/// Zero-deviation candidates are always selected.
pub fn solve_knapsack(
    assessments: &[CandidateAssessment],
    budget: &Budget,
) -> Result<Vec<CandidateAssessment>> {
    if assessments.iter().any(|a| a.mu < 0.0 || !a.mu.is_finite()) {
        return Err(Error::Argument(
            "deviations must be non-negative and finite".into(),
        ));
    }
    // Candidates in id order so tie-breaks are stable.
    let mut ordered: Vec<CandidateAssessment> = assessments.to_vec();
    ordered.sort_by_key(|a| a.id());
    for a in &mut ordered {
        a.selected = false;
    }

    let capacity = budget.capacity();
    let paying: Vec<usize> = (0..ordered.len()).filter(|&i| ordered[i].mu > 0.0).collect();
    // Free candidates cost nothing and each contributes k >= 1.
    for (i, a) in ordered.iter_mut().enumerate() {
        if !paying.contains(&i) {
            a.selected = true;
        }
    }

    let ks: Vec<u64> = paying.iter().map(|&i| ordered[i].k as u64).collect();
    let mus: Vec<f64> = paying.iter().map(|&i| ordered[i].mu).collect();
    let picks = if paying.len() <= 20 {
        exhaustive_best(&ks, &mus, capacity)
    } else {
        dp_best(&ks, &mus, capacity)
    };
    for p in picks {
        ordered[paying[p]].selected = true;
    }
    Ok(ordered)
}

/// How gamma is obtained when not given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaMode {
    /// Worst-case MAE of the original model over the points, measured on a
    /// validation slice carved from the train log.
    Auto,
    /// Use the configured value as-is.
    Fixed,
}

impl std::str::FromStr for GammaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(GammaMode::Auto),
            "fixed" => Ok(GammaMode::Fixed),
            other => Err(Error::Argument(format!(
                "unknown gamma mode `{other}` (expected auto or fixed)"
            ))),
        }
    }
}

/// Resolves the budget. `Auto` trains on the inner 80% of the train log and
/// takes the worst per-point MAE on the held-back slice as gamma.
pub fn resolve_budget(
    train: &EventLog,
    points: &[String],
    cfg: &TrainConfig,
    mode: GammaMode,
    gamma_value: Option<f64>,
    g: f64,
) -> Result<Budget> {
    match mode {
        GammaMode::Fixed => {
            let gamma = gamma_value.ok_or_else(|| {
                Error::Config("gamma_mode=fixed requires gamma_value".into())
            })?;
            Budget::new(gamma, g)
        }
        GammaMode::Auto => {
            let (inner_train, inner_val) = temporal_split(train, 0.8)?;
            let mut worst = 0.0_f64;
            for point in points {
                worst = worst.max(evaluate_point(&inner_train, &inner_val, point, cfg)?);
            }
            Budget::new(worst, g)
        }
    }
}

/// Per-point before/after comparison for the final simplified log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalPointRow {
    pub point: String,
    pub original_mae: f64,
    pub simplified_mae: f64,
    pub improvement_pct: f64,
}

/// Everything the optimisation run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub points: Vec<String>,
    pub assessments: Vec<CandidateAssessment>,
    pub budget: Budget,
    /// Exact deviation sum of the accepted set.
    pub total_mu_selected: f64,
    pub total_k_selected: usize,
    pub final_rows: Vec<FinalPointRow>,
    pub folded: Vec<FoldedActivity>,
    pub original_events: usize,
    pub simplified_events: usize,
    pub reduction_pct: f64,
}

/// Extra knobs for the optimisation pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub split_fraction: f64,
    pub train: TrainConfig,
    /// Assess deviations at this single point instead of worst-case over all.
    pub assess_point: Option<String>,
    pub or_overwrite_pooled: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            split_fraction: 0.8,
            train: TrainConfig::default(),
            assess_point: None,
            or_overwrite_pooled: false,
        }
    }
}

/// Assesses, solves and applies: returns the simplified full log plus the
/// report. Candidate deviations are measured on the train/test split; the
/// accepted folds are then applied jointly to the whole log.
pub fn optimize_log(
    elog: &EventLog,
    net: &Gspn,
    candidates: &[FoldCandidate],
    points: &PredictionPointSet,
    budget: &Budget,
    cfg: &OptimizeConfig,
) -> Result<(EventLog, OptimizeReport)> {
    for cand in candidates {
        if let Some(p) = cand
            .member_activities
            .iter()
            .find(|m| points.points.contains(*m))
        {
            return Err(Error::ProtectionViolation(format!(
                "candidate {} contains prediction point `{p}`",
                cand.id()
            )));
        }
    }

    let (train, test) = temporal_split(elog, cfg.split_fraction)?;
    let assess_points: Vec<String> = match &cfg.assess_point {
        Some(p) => vec![p.clone()],
        None => points.points.iter().cloned().collect(),
    };
    let (assessments, original_mae) =
        assess_candidates(&train, &test, net, candidates, &assess_points, &cfg.train)?;

    let solved = solve_knapsack(&assessments, budget)?;
    let accepted: Vec<FoldCandidate> = solved
        .iter()
        .filter(|a| a.selected)
        .map(|a| a.candidate.clone())
        .collect();
    let total_mu_selected: f64 = solved.iter().filter(|a| a.selected).map(|a| a.mu).sum();
    let total_k_selected: usize = solved.iter().filter(|a| a.selected).map(|a| a.k).sum();

    let (simplified, _, folded) =
        simplify_log_with(elog, net, &accepted, cfg.or_overwrite_pooled)?;

    // Final before/after comparison on the split, all folds applied.
    let (ftrain, _, _) = simplify_log_with(&train, net, &accepted, cfg.or_overwrite_pooled)?;
    let (ftest, _, _) = simplify_log_with(&test, net, &accepted, cfg.or_overwrite_pooled)?;
    let mut final_rows = Vec::new();
    for point in &assess_points {
        let original = original_mae[point];
        let simplified_mae = evaluate_point(&ftrain, &ftest, point, &cfg.train)?;
        final_rows.push(FinalPointRow {
            point: point.clone(),
            original_mae: original,
            simplified_mae,
            improvement_pct: if original > 0.0 {
                (original - simplified_mae) / original * 100.0
            } else {
                0.0
            },
        });
    }

    let original_events = elog.num_events();
    let simplified_events = simplified.num_events();
    let report = OptimizeReport {
        points: assess_points,
        assessments: solved,
        budget: *budget,
        total_mu_selected,
        total_k_selected,
        final_rows,
        folded,
        original_events,
        simplified_events,
        reduction_pct: if original_events > 0 {
            (1.0 - simplified_events as f64 / original_events as f64) * 100.0
        } else {
            0.0
        },
    };
    Ok((simplified, report))
}
