//! Regressor contract and the built-in gradient-boosted regression stumps.
//!
//! The default regressor fits squared error with depth-1 trees: each round
//! picks the single (feature, threshold) split whose two leaf means best fit
//! the current residuals, scaled by the learning rate. Sorting each feature
//! once up front keeps a round at O(features x samples).

use serde::{Deserialize, Serialize};

/// Anything that can be trained on feature vectors and produce one real
/// output per vector. Swapping in another implementation changes nothing
/// else in the pipeline.
pub trait Regressor {
    fn fit(&mut self, features: &[Vec<f64>], targets: &[f64]);
    fn predict(&self, features: &[f64]) -> f64;
}

/// One depth-1 tree: `x[feature] <= threshold` picks the left value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

impl Stump {
    fn apply(&self, x: &[f64]) -> f64 {
        if x[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostedStumps {
    pub rounds: usize,
    pub learning_rate: f64,
    pub base: f64,
    pub stumps: Vec<Stump>,
    /// Mean squared error on the training set after each round.
    #[serde(skip)]
    pub train_mse_history: Vec<f64>,
}

impl GradientBoostedStumps {
    pub fn new(rounds: usize, learning_rate: f64) -> Self {
        GradientBoostedStumps {
            rounds,
            learning_rate,
            base: 0.0,
            stumps: Vec::new(),
            train_mse_history: Vec::new(),
        }
    }
}

/// Best split of one presorted feature against the residuals; returns
/// (threshold, left mean, right mean, sse) or None when the feature is
/// constant.
fn best_split(
    order: &[usize],
    values: &[f64],
    residuals: &[f64],
) -> Option<(f64, f64, f64, f64)> {
    let n = order.len();
    let total: f64 = residuals.iter().sum();
    let total_sq: f64 = residuals.iter().map(|r| r * r).sum();

    let mut best: Option<(f64, f64, f64, f64)> = None;
    let mut left_sum = 0.0;
    for split in 1..n {
        left_sum += residuals[order[split - 1]];
        let prev = values[order[split - 1]];
        let cur = values[order[split]];
        if prev == cur {
            continue; // cannot split between equal values
        }
        let left_n = split as f64;
        let right_n = (n - split) as f64;
        let right_sum = total - left_sum;
        // SSE with per-side means: total_sq - sum^2/n per side.
        let sse = total_sq - left_sum * left_sum / left_n - right_sum * right_sum / right_n;
        let better = match best {
            None => true,
            Some((_, _, _, b)) => sse < b - 1e-12,
        };
        if better {
            best = Some((
                (prev + cur) / 2.0,
                left_sum / left_n,
                right_sum / right_n,
                sse,
            ));
        }
    }
    best
}

impl Regressor for GradientBoostedStumps {
    fn fit(&mut self, features: &[Vec<f64>], targets: &[f64]) {
        assert_eq!(features.len(), targets.len());
        assert!(!targets.is_empty());
        let n = targets.len();
        let dim = features[0].len();

        self.base = targets.iter().sum::<f64>() / n as f64;
        self.stumps.clear();
        self.train_mse_history.clear();

        let mut residuals: Vec<f64> = targets.iter().map(|t| t - self.base).collect();

        // Column views and one sort per feature, reused every round.
        let columns: Vec<Vec<f64>> = (0..dim)
            .map(|f| features.iter().map(|x| x[f]).collect())
            .collect();
        let orders: Vec<Vec<usize>> = columns
            .iter()
            .map(|col| {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).unwrap());
                idx
            })
            .collect();

        for _ in 0..self.rounds {
            let mut chosen: Option<(usize, f64, f64, f64, f64)> = None;
            for f in 0..dim {
                if let Some((thr, left, right, sse)) =
                    best_split(&orders[f], &columns[f], &residuals)
                {
                    let better = match chosen {
                        None => true,
                        Some((_, _, _, _, b)) => sse < b - 1e-12,
                    };
                    if better {
                        chosen = Some((f, thr, left, right, sse));
                    }
                }
            }
            let stump = match chosen {
                Some((feature, threshold, left, right, _)) => Stump {
                    feature,
                    threshold,
                    left: left * self.learning_rate,
                    right: right * self.learning_rate,
                },
                None => {
                    // Constant features: shrink toward the residual mean.
                    let mean = residuals.iter().sum::<f64>() / n as f64;
                    Stump {
                        feature: 0,
                        threshold: f64::INFINITY,
                        left: mean * self.learning_rate,
                        right: mean * self.learning_rate,
                    }
                }
            };
            for (i, r) in residuals.iter_mut().enumerate() {
                *r -= stump.apply(&features[i]);
            }
            self.stumps.push(stump);
            let mse = residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;
            self.train_mse_history.push(mse);
        }
    }

    fn predict(&self, features: &[f64]) -> f64 {
        self.base
            + self
                .stumps
                .iter()
                .map(|s| s.apply(features))
                .sum::<f64>()
    }
}
