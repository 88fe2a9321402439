//! Remaining-time prediction over trace prefixes.
//!
//! A sample is the prefix of one trace cut at the first occurrence of the
//! prediction point, index-encoded: activity ids interleaved with execution
//! times, zero-padded (or truncated to the most recent events) to a fixed
//! length. Samples are clustered with k-means and each bucket gets its own
//! regressor; thin buckets fall back to the global mean.

use serde::{Deserialize, Serialize};

use crate::boost::{GradientBoostedStumps, Regressor};
use crate::error::{Error, Result};
use crate::eventlog::{execution_times, remaining_time, EventLog};
use crate::kmeans::{kmeans, nearest};

/// Stable activity-to-integer dictionary built from a training log.
/// Id 0 is reserved for padding and unseen activities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityEncoder {
    ids: std::collections::BTreeMap<String, usize>,
}

impl ActivityEncoder {
    pub fn from_log(log: &EventLog) -> Self {
        let ids = log
            .activities
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i + 1))
            .collect();
        ActivityEncoder { ids }
    }

    pub fn encode(&self, activity: &str) -> usize {
        self.ids.get(activity).copied().unwrap_or(0)
    }
}

/// One encoded prefix with its remaining-time target in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixSample {
    pub features: Vec<f64>,
    pub target: f64,
    pub case_id: String,
}

/// Builds one sample per trace containing `point`, cut at its first
/// occurrence. Feature length is `2 * prefix_len`; longer prefixes keep the
/// most recent events.
pub fn extract_prefixes(
    log: &EventLog,
    point: &str,
    prefix_len: usize,
    encoder: &ActivityEncoder,
) -> Result<Vec<PrefixSample>> {
    if prefix_len == 0 {
        return Err(Error::Argument("prefix_len must be positive".into()));
    }
    let mut samples = Vec::new();
    for trace in &log.traces {
        let idx = match trace.events.iter().position(|e| e.activity == point) {
            Some(i) => i,
            None => continue,
        };
        let times = execution_times(trace);
        let window_start = (idx + 1).saturating_sub(prefix_len);
        let mut features = Vec::with_capacity(2 * prefix_len);
        for i in window_start..=idx {
            features.push(encoder.encode(&trace.events[i].activity) as f64);
            features.push(times[i].1.as_f64());
        }
        features.resize(2 * prefix_len, 0.0);
        samples.push(PrefixSample {
            features,
            target: remaining_time(trace, idx)? as f64,
            case_id: trace.case_id.clone(),
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyLog(format!(
            "prediction point `{point}` occurs in no trace"
        )));
    }
    Ok(samples)
}

/// Knobs for bucketing and the per-bucket regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub k: usize,
    pub prefix_len: usize,
    pub seed: u64,
    pub rounds: usize,
    pub learning_rate: f64,
    /// Buckets below this size fall back to the global mean.
    pub min_bucket: usize,
    pub kmeans_max_iter: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k: 3,
            prefix_len: 8,
            seed: 42,
            rounds: 100,
            learning_rate: 0.1,
            min_bucket: 5,
            kmeans_max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "R: Serialize",
    deserialize = "R: serde::de::DeserializeOwned"
))]
pub enum Bucket<R> {
    Trained(R),
    GlobalMean,
}

/// Cluster centroids plus one regressor (or fallback) per bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "R: Serialize",
    deserialize = "R: serde::de::DeserializeOwned"
))]
pub struct PredictionModel<R = GradientBoostedStumps> {
    pub config: TrainConfig,
    pub centroids: Vec<Vec<f64>>,
    pub buckets: Vec<Bucket<R>>,
    pub global_mean: f64,
}

/// Trains the default boosted-stump model.
pub fn train(samples: &[PrefixSample], config: &TrainConfig) -> Result<PredictionModel> {
    let cfg = config.clone();
    train_with(samples, config, move || {
        GradientBoostedStumps::new(cfg.rounds, cfg.learning_rate)
    })
}

/// Trains with any regressor satisfying the contract.
pub fn train_with<R: Regressor>(
    samples: &[PrefixSample],
    config: &TrainConfig,
    make_regressor: impl Fn() -> R,
) -> Result<PredictionModel<R>> {
    if config.k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if samples.len() < config.k {
        return Err(Error::Config(format!(
            "{} samples cannot fill k={} buckets; use a smaller k",
            samples.len(),
            config.k
        )));
    }
    let dim = samples[0].features.len();
    if samples.iter().any(|s| s.features.len() != dim) {
        return Err(Error::Argument(
            "all samples must share one feature length".into(),
        ));
    }

    let points: Vec<Vec<f64>> = samples.iter().map(|s| s.features.clone()).collect();
    let fit = kmeans(&points, config.k, config.seed, config.kmeans_max_iter);
    let global_mean =
        samples.iter().map(|s| s.target).sum::<f64>() / samples.len() as f64;

    let mut buckets = Vec::with_capacity(config.k);
    for b in 0..config.k {
        let idx: Vec<usize> = (0..samples.len())
            .filter(|&i| fit.assignment[i] == b)
            .collect();
        if idx.len() < config.min_bucket {
            buckets.push(Bucket::GlobalMean);
            continue;
        }
        let xs: Vec<Vec<f64>> = idx.iter().map(|&i| samples[i].features.clone()).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| samples[i].target).collect();
        let mut reg = make_regressor();
        reg.fit(&xs, &ys);
        buckets.push(Bucket::Trained(reg));
    }

    Ok(PredictionModel {
        config: config.clone(),
        centroids: fit.centroids,
        buckets,
        global_mean,
    })
}

/// Routes the sample to its nearest bucket and clamps the output at zero.
pub fn predict<R: Regressor>(model: &PredictionModel<R>, features: &[f64]) -> Result<f64> {
    let dim = model.centroids.first().map(|c| c.len()).unwrap_or(0);
    if features.len() != dim {
        return Err(Error::Argument(format!(
            "feature length {} does not match model's {dim}",
            features.len()
        )));
    }
    let bucket = nearest(features, &model.centroids);
    let raw = match &model.buckets[bucket] {
        Bucket::Trained(reg) => reg.predict(features),
        Bucket::GlobalMean => model.global_mean,
    };
    Ok(raw.max(0.0))
}

/// Mean absolute error between two equal-length series.
pub fn mae(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != actuals.len() {
        return Err(Error::Argument(format!(
            "need equal non-empty series, got {} and {}",
            predictions.len(),
            actuals.len()
        )));
    }
    Ok(predictions
        .iter()
        .zip(actuals)
        .map(|(p, a)| (p - a).abs())
        .sum::<f64>()
        / predictions.len() as f64)
}

/// Trains on `train_log` and reports MAE at `point` on `eval_log`, using the
/// encoder built from the training log.
pub fn evaluate_point(
    train_log: &EventLog,
    eval_log: &EventLog,
    point: &str,
    config: &TrainConfig,
) -> Result<f64> {
    let encoder = ActivityEncoder::from_log(train_log);
    let train_samples = extract_prefixes(train_log, point, config.prefix_len, &encoder)?;
    let model = train(&train_samples, config)?;
    let eval_samples = extract_prefixes(eval_log, point, config.prefix_len, &encoder)?;
    let predictions: Vec<f64> = eval_samples
        .iter()
        .map(|s| predict(&model, &s.features))
        .collect::<Result<_>>()?;
    let actuals: Vec<f64> = eval_samples.iter().map(|s| s.target).collect();
    mae(&predictions, &actuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::log_of;

    #[test]
    fn prefix_example_encoding() {
        let log = log_of(&[("c1", &[("A", "r", 0), ("B", "r", 60), ("D", "r", 100)])]);
        let encoder = ActivityEncoder::from_log(&log);
        let samples = extract_prefixes(&log, "B", 4, &encoder).unwrap();
        assert_eq!(samples.len(), 1);
        let a = encoder.encode("A") as f64;
        let b = encoder.encode("B") as f64;
        assert_eq!(samples[0].features, vec![a, 0.0, b, 60.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(samples[0].target, 40.0);
    }

    #[test]
    fn point_at_trace_end_has_zero_target() {
        let log = log_of(&[("c1", &[("A", "r", 0), ("B", "r", 60)])]);
        let encoder = ActivityEncoder::from_log(&log);
        let samples = extract_prefixes(&log, "B", 4, &encoder).unwrap();
        assert_eq!(samples[0].target, 0.0);
    }

    #[test]
    fn one_sample_per_matching_trace() {
        let traces: Vec<(String, Vec<(&str, &str, i64)>)> = (0..50)
            .map(|i| {
                let evs: Vec<(&str, &str, i64)> = if i % 2 == 0 {
                    vec![("A", "r", 0), ("P", "r", 10), ("Z", "r", 30)]
                } else {
                    vec![("A", "r", 0), ("Z", "r", 30)]
                };
                (format!("c{i}"), evs)
            })
            .collect();
        let borrowed: Vec<(&str, &[(&str, &str, i64)])> = traces
            .iter()
            .map(|(c, e)| (c.as_str(), e.as_slice()))
            .collect();
        let log = log_of(&borrowed);
        let encoder = ActivityEncoder::from_log(&log);
        let samples = extract_prefixes(&log, "P", 4, &encoder).unwrap();
        assert_eq!(samples.len(), 25);
    }

    #[test]
    fn absent_point_errors() {
        let log = log_of(&[("c1", &[("A", "r", 0), ("B", "r", 10)])]);
        let encoder = ActivityEncoder::from_log(&log);
        assert!(extract_prefixes(&log, "Q", 4, &encoder).is_err());
    }

    #[test]
    fn long_prefix_keeps_most_recent_events() {
        let log = log_of(&[(
            "c1",
            &[("A", "r", 0), ("B", "r", 10), ("C", "r", 30), ("P", "r", 60), ("Z", "r", 100)],
        )]);
        let encoder = ActivityEncoder::from_log(&log);
        let samples = extract_prefixes(&log, "P", 2, &encoder).unwrap();
        let c = encoder.encode("C") as f64;
        let p = encoder.encode("P") as f64;
        assert_eq!(samples[0].features, vec![c, 20.0, p, 30.0]);
    }

    fn constant_samples(n: usize, target: f64) -> Vec<PrefixSample> {
        (0..n)
            .map(|i| PrefixSample {
                features: vec![(i % 7) as f64, (i % 3) as f64],
                target,
                case_id: format!("c{i}"),
            })
            .collect()
    }

    #[test]
    fn constant_targets_predict_constant() {
        let samples = constant_samples(40, 123.0);
        let cfg = TrainConfig {
            k: 2,
            ..TrainConfig::default()
        };
        let model = train(&samples, &cfg).unwrap();
        for s in &samples {
            assert!((predict(&model, &s.features).unwrap() - 123.0).abs() < 1e-6);
        }
    }

    #[test]
    fn two_separated_clusters_beat_global_mean() {
        let mut samples = Vec::new();
        for i in 0..60 {
            samples.push(PrefixSample {
                features: vec![0.0 + (i % 5) as f64, 1.0],
                target: 100.0,
                case_id: format!("a{i}"),
            });
            samples.push(PrefixSample {
                features: vec![1000.0 + (i % 5) as f64, -1.0],
                target: 10_000.0,
                case_id: format!("b{i}"),
            });
        }
        let cfg = TrainConfig {
            k: 2,
            ..TrainConfig::default()
        };
        let model = train(&samples, &cfg).unwrap();
        let predictions: Vec<f64> = samples
            .iter()
            .map(|s| predict(&model, &s.features).unwrap())
            .collect();
        let actuals: Vec<f64> = samples.iter().map(|s| s.target).collect();
        let model_mae = mae(&predictions, &actuals).unwrap();
        let global = actuals.iter().sum::<f64>() / actuals.len() as f64;
        let global_mae = mae(&vec![global; actuals.len()], &actuals).unwrap();
        assert!(model_mae < global_mae / 10.0);
    }

    #[test]
    fn k1_behaves_like_single_regressor() {
        let samples = constant_samples(30, 55.0);
        let cfg = TrainConfig {
            k: 1,
            ..TrainConfig::default()
        };
        let model = train(&samples, &cfg).unwrap();
        assert_eq!(model.buckets.len(), 1);
        assert!((predict(&model, &samples[0].features).unwrap() - 55.0).abs() < 1e-6);
    }

    #[test]
    fn too_few_samples_is_a_config_error() {
        let samples = constant_samples(2, 1.0);
        let cfg = TrainConfig {
            k: 3,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&samples, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn prediction_clamped_non_negative() {
        // Steeply decreasing targets push extrapolation below zero; the
        // global-mean fallback cannot, so force trained buckets.
        let samples: Vec<PrefixSample> = (0..50)
            .map(|i| PrefixSample {
                features: vec![i as f64],
                target: (50 - i) as f64 * 10.0 - 200.0,
                case_id: format!("c{i}"),
            })
            .collect();
        let cfg = TrainConfig {
            k: 1,
            ..TrainConfig::default()
        };
        let model = train(&samples, &cfg).unwrap();
        let far = predict(&model, &[500.0]).unwrap();
        assert!(far >= 0.0);
    }

    #[test]
    fn mismatched_length_rejected() {
        let samples = constant_samples(10, 5.0);
        let cfg = TrainConfig {
            k: 1,
            ..TrainConfig::default()
        };
        let model = train(&samples, &cfg).unwrap();
        assert!(predict(&model, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn training_is_reproducible() {
        let samples: Vec<PrefixSample> = (0..80)
            .map(|i| PrefixSample {
                features: vec![(i * 13 % 29) as f64, (i * 7 % 11) as f64],
                target: (i * 37 % 101) as f64,
                case_id: format!("c{i}"),
            })
            .collect();
        let cfg = TrainConfig::default();
        let a = train(&samples, &cfg).unwrap();
        let b = train(&samples, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[-10.0], &[10.0]).unwrap(), 20.0);
        assert_eq!(mae(&[2.0, 4.0, 0.0], &[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert!(mae(&[], &[]).is_err());
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn mae_symmetric_and_nonnegative() {
        let a = [3.0, 9.0, 1.5];
        let b = [2.0, 11.0, 1.5];
        let ab = mae(&a, &b).unwrap();
        let ba = mae(&b, &a).unwrap();
        assert_eq!(ab, ba);
        assert!(ab >= 0.0);
    }

    #[test]
    fn model_json_round_trip() {
        let samples = constant_samples(30, 42.0);
        let cfg = TrainConfig {
            k: 2,
            ..TrainConfig::default()
        };
        let model = train(&samples, &cfg).unwrap();
        let text = serde_json::to_string(&model).unwrap();
        let back: PredictionModel = serde_json::from_str(&text).unwrap();
        for s in &samples {
            assert_eq!(
                predict(&model, &s.features).unwrap(),
                predict(&back, &s.features).unwrap()
            );
        }
    }
}
