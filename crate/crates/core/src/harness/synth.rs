//! Synthetic hospital-process log generator.
//!
//! Cases flow through registration and triage, a block of repeated lab
//! tests, antibiotics, an admission choice and a release choice. Each case
//! draws a severity factor; severity-scaled activities take longer in severe
//! cases, so lab durations carry signal about the remaining time. An
//! optional noise activity repeats mid-process with durations independent of
//! everything else, for benchmarking how well simplification removes
//! low-value events.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::{Event, EventLog, Trace};

pub const ER_REGISTRATION: &str = "ER Registration";
pub const ER_TRIAGE: &str = "ER Triage";
pub const ER_SEPSIS_TRIAGE: &str = "ER Sepsis Triage";
pub const LEUCOCYTES: &str = "Leucocytes";
pub const CRP: &str = "CRP";
pub const LACTIC_ACID: &str = "LacticAcid";
pub const IV_ANTIBIOTICS: &str = "IV Antibiotics";
pub const ADMISSION_NC: &str = "Admission NC";
pub const ADMISSION_IC: &str = "Admission IC";
pub const RELEASES: [&str; 5] = [
    "Release A",
    "Release B",
    "Release C",
    "Release D",
    "Release E",
];
pub const NOISE_ACTIVITY: &str = "Records Noise";

/// Delay model for one activity: log-normal around `median_secs`, optionally
/// multiplied by the case's severity factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySpec {
    pub median_secs: f64,
    pub sigma: f64,
    pub severity_scaled: bool,
}

impl DelaySpec {
    fn new(median_secs: f64, sigma: f64, severity_scaled: bool) -> Self {
        DelaySpec {
            median_secs,
            sigma,
            severity_scaled,
        }
    }
}

/// Mid-process noise runs: repeated events whose durations are drawn
/// independently of the case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub label: String,
    pub min_run: usize,
    pub max_run: usize,
    pub max_secs: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            label: NOISE_ACTIVITY.to_string(),
            min_run: 2,
            max_run: 5,
            max_secs: 14_400.0,
        }
    }
}

/// Everything the generator needs: case count, arrival spacing, routing
/// probabilities, per-activity delays, lab repetition and resource pools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub cases: usize,
    pub start_epoch: i64,
    pub arrival_spacing_secs: f64,
    /// Probability of another repetition of the same lab test.
    pub lab_repeat_prob: f64,
    pub lab_repeat_cap: usize,
    pub admission_ic_prob: f64,
    /// One probability per release branch; must sum to 1.
    pub release_probs: Vec<f64>,
    pub severity_sigma: f64,
    pub er_pool: Vec<String>,
    pub lab_pool: Vec<String>,
    pub doctor_pool: Vec<String>,
    pub ward_pool: Vec<String>,
    pub delays: Vec<(String, DelaySpec)>,
    pub noise: Option<NoiseSpec>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        let delays = vec![
            (ER_REGISTRATION.to_string(), DelaySpec::new(60.0, 0.3, false)),
            (ER_TRIAGE.to_string(), DelaySpec::new(600.0, 0.4, false)),
            (ER_SEPSIS_TRIAGE.to_string(), DelaySpec::new(900.0, 0.4, false)),
            (LEUCOCYTES.to_string(), DelaySpec::new(2_400.0, 0.5, true)),
            (CRP.to_string(), DelaySpec::new(2_700.0, 0.5, true)),
            (LACTIC_ACID.to_string(), DelaySpec::new(2_100.0, 0.5, true)),
            (IV_ANTIBIOTICS.to_string(), DelaySpec::new(5_400.0, 0.4, true)),
            (ADMISSION_NC.to_string(), DelaySpec::new(90_000.0, 0.5, true)),
            (ADMISSION_IC.to_string(), DelaySpec::new(200_000.0, 0.5, true)),
        ];
        let mut delays = delays;
        for r in RELEASES {
            delays.push((r.to_string(), DelaySpec::new(40_000.0, 0.4, true)));
        }
        SyntheticSpec {
            cases: 1_000,
            start_epoch: 1_500_000_000,
            arrival_spacing_secs: 7_200.0,
            lab_repeat_prob: 2.0 / 3.0,
            lab_repeat_cap: 8,
            admission_ic_prob: 0.25,
            release_probs: vec![0.2; 5],
            severity_sigma: 0.6,
            er_pool: vec!["er1".into(), "er2".into(), "er3".into()],
            lab_pool: vec!["lab1".into(), "lab2".into()],
            doctor_pool: vec!["doc1".into(), "doc2".into()],
            ward_pool: vec!["ward1".into(), "ward2".into()],
            delays,
            noise: None,
        }
    }
}

impl SyntheticSpec {
    /// The default spec with noise runs enabled.
    pub fn with_noise() -> Self {
        let mut spec = SyntheticSpec::default();
        spec.noise = Some(NoiseSpec::default());
        spec
    }

    fn validate(&self) -> Result<()> {
        if self.cases == 0 {
            return Err(Error::Config("cases must be positive".into()));
        }
        let sum: f64 = self.release_probs.iter().sum();
        if self.release_probs.len() != RELEASES.len() || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "release probabilities must be {} values summing to 1, got sum {sum}",
                RELEASES.len()
            )));
        }
        if !(0.0..1.0).contains(&self.lab_repeat_prob) {
            return Err(Error::Config(
                "lab_repeat_prob must be in [0,1)".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.admission_ic_prob) {
            return Err(Error::Config(
                "admission_ic_prob must be in [0,1]".into(),
            ));
        }
        if self.delays.iter().any(|(_, d)| d.median_secs <= 0.0) {
            return Err(Error::Config("delay medians must be positive".into()));
        }
        for pool in [&self.er_pool, &self.lab_pool, &self.doctor_pool, &self.ward_pool] {
            if pool.is_empty() {
                return Err(Error::Config("resource pools must be non-empty".into()));
            }
        }
        Ok(())
    }

    fn delay_for(&self, activity: &str) -> Option<&DelaySpec> {
        self.delays
            .iter()
            .find(|(a, _)| a == activity)
            .map(|(_, d)| d)
    }
}

struct CaseBuilder<'a> {
    spec: &'a SyntheticSpec,
    rng: &'a mut ChaCha8Rng,
    severity: f64,
    clock: i64,
    events: Vec<(String, String, i64)>,
}

impl<'a> CaseBuilder<'a> {
    fn push(&mut self, activity: &str, resource: &str) {
        let delay = match self.spec.delay_for(activity) {
            Some(d) => {
                let ln = LogNormal::new(d.median_secs.ln(), d.sigma).unwrap();
                let mut secs = ln.sample(self.rng);
                if d.severity_scaled {
                    secs *= self.severity;
                }
                secs
            }
            None => 0.0,
        };
        self.clock += (delay.round() as i64).max(1);
        self.events
            .push((activity.to_string(), resource.to_string(), self.clock));
    }

    fn push_noise(&mut self, noise: &NoiseSpec, resource: &str) {
        let secs = Uniform::new(1.0, noise.max_secs.max(2.0)).sample(self.rng);
        self.clock += secs.round() as i64;
        self.events
            .push((noise.label.clone(), resource.to_string(), self.clock));
    }
}

fn pick<'a>(pool: &'a [String], rng: &mut ChaCha8Rng) -> &'a str {
    &pool[rng.gen_range(0..pool.len())]
}

/// Picks an element different from `not` when the pool allows it.
fn pick_other<'a>(pool: &'a [String], not: &str, rng: &mut ChaCha8Rng) -> &'a str {
    if pool.len() == 1 {
        return &pool[0];
    }
    loop {
        let cand = pick(pool, rng);
        if cand != not {
            return cand;
        }
    }
}

/// Samples one event log from the spec. Deterministic per seed.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<EventLog> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let severity_dist = LogNormal::new(0.0, spec.severity_sigma).unwrap();
    let mut traces = Vec::with_capacity(spec.cases);

    for case_no in 0..spec.cases {
        let case_id = format!("case{:05}", case_no + 1);
        let arrival_jitter = rng.gen_range(0.0..spec.arrival_spacing_secs);
        let start = spec.start_epoch
            + (case_no as f64 * spec.arrival_spacing_secs + arrival_jitter).round() as i64;
        let severity = severity_dist.sample(&mut rng);
        let mut case = CaseBuilder {
            spec,
            rng: &mut rng,
            severity,
            clock: start,
            events: Vec::new(),
        };

        // Registration and triage, rotating ER staff so handovers stay
        // inside the ER group.
        let reg = pick(&spec.er_pool, case.rng).to_string();
        case.events.push((ER_REGISTRATION.into(), reg.clone(), case.clock));
        let triage = pick_other(&spec.er_pool, &reg, case.rng).to_string();
        case.push(ER_TRIAGE, &triage);
        let sepsis = pick_other(&spec.er_pool, &triage, case.rng).to_string();
        case.push(ER_SEPSIS_TRIAGE, &sepsis);

        // Optional noise runs between triage and the labs.
        if let Some(noise) = &spec.noise {
            let runs = case.rng.gen_range(noise.min_run..=noise.max_run);
            let mut who = pick(&spec.lab_pool, case.rng).to_string();
            for _ in 0..runs {
                case.push_noise(noise, &who);
                who = pick_other(&spec.lab_pool, &who, case.rng).to_string();
            }
        }

        // Lab tests, each repeated as a consecutive run, alternating lab
        // staff so the lab group accumulates internal handovers.
        let mut lab_who = pick(&spec.lab_pool, case.rng).to_string();
        for test in [LEUCOCYTES, CRP, LACTIC_ACID] {
            let mut repeats = 1;
            while repeats < spec.lab_repeat_cap
                && case.rng.gen::<f64>() < spec.lab_repeat_prob
            {
                repeats += 1;
            }
            for _ in 0..repeats {
                case.push(test, &lab_who);
                lab_who = pick_other(&spec.lab_pool, &lab_who, case.rng).to_string();
            }
        }

        let doctor = pick(&spec.doctor_pool, case.rng).to_string();
        case.push(IV_ANTIBIOTICS, &doctor);

        let admission = if case.rng.gen::<f64>() < spec.admission_ic_prob {
            ADMISSION_IC
        } else {
            ADMISSION_NC
        };
        let ward = pick(&spec.ward_pool, case.rng).to_string();
        case.push(admission, &ward);

        let mut roll = case.rng.gen::<f64>();
        let mut release = RELEASES[RELEASES.len() - 1];
        for (i, p) in spec.release_probs.iter().enumerate() {
            if roll < *p {
                release = RELEASES[i];
                break;
            }
            roll -= p;
        }
        let ward2 = pick_other(&spec.ward_pool, &ward, case.rng).to_string();
        case.push(release, &ward2);

        let events = case
            .events
            .iter()
            .map(|(a, r, t)| Event::new(case_id.clone(), a.clone(), r.clone(), *t))
            .collect();
        traces.push(Trace::new(case_id, events));
    }
    EventLog::from_traces(traces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_hits_published_scale() {
        let log = generate_synthetic(&SyntheticSpec::default(), 42).unwrap();
        let cases = log.num_traces();
        let events = log.num_events();
        assert!((900..=1100).contains(&cases), "cases {cases}");
        assert!((13_500..=16_500).contains(&events), "events {events}");
        assert_eq!(log.activities.len(), RELEASES.len() + 9);
    }

    #[test]
    fn same_seed_same_log() {
        let spec = SyntheticSpec::default();
        let a = generate_synthetic(&spec, 7).unwrap();
        let b = generate_synthetic(&spec, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&spec, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_case_no_loops_is_deterministic_shape() {
        let mut spec = SyntheticSpec::default();
        spec.cases = 1;
        spec.lab_repeat_prob = 0.0;
        let log = generate_synthetic(&spec, 1).unwrap();
        assert_eq!(log.num_traces(), 1);
        let acts = log.traces[0].activity_sequence();
        assert_eq!(acts.len(), 9);
        assert_eq!(acts[0], ER_REGISTRATION);
        assert_eq!(acts[3], LEUCOCYTES);
        assert!(acts[8].starts_with("Release"));
    }

    #[test]
    fn bad_probabilities_rejected() {
        let mut spec = SyntheticSpec::default();
        spec.release_probs = vec![0.5; 5];
        assert!(matches!(
            generate_synthetic(&spec, 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn noise_runs_present_when_enabled() {
        let log = generate_synthetic(&SyntheticSpec::with_noise(), 3).unwrap();
        assert!(log.activities.contains(NOISE_ACTIVITY));
        // Some trace repeats the noise activity consecutively.
        let has_run = log.traces.iter().any(|t| {
            t.events
                .windows(2)
                .any(|w| w[0].activity == NOISE_ACTIVITY && w[1].activity == NOISE_ACTIVITY)
        });
        assert!(has_run);
    }

    #[test]
    fn timestamps_strictly_increase_within_case() {
        let log = generate_synthetic(&SyntheticSpec::with_noise(), 5).unwrap();
        for t in &log.traces {
            for w in t.events.windows(2) {
                assert!(w[0].timestamp < w[1].timestamp);
            }
        }
    }

    #[test]
    fn resources_stay_in_their_pools() {
        let spec = SyntheticSpec::default();
        let log = generate_synthetic(&spec, 11).unwrap();
        for t in &log.traces {
            for e in &t.events {
                let pool: &[String] = match e.activity.as_str() {
                    ER_REGISTRATION | ER_TRIAGE | ER_SEPSIS_TRIAGE => &spec.er_pool,
                    LEUCOCYTES | CRP | LACTIC_ACID => &spec.lab_pool,
                    IV_ANTIBIOTICS => &spec.doctor_pool,
                    _ => &spec.ward_pool,
                };
                assert!(pool.contains(&e.resource), "{} by {}", e.activity, e.resource);
            }
        }
    }
}
