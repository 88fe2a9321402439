//! Event log data model: cases, events, derived timing features and the
//! temporal train/test split.
//!
//! Timestamps are kept as whole seconds since the Unix epoch. Within a trace
//! events are ordered by timestamp, ties keeping their input order, so parsing
//! is deterministic.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};

use crate::error::{Error, Result};

/// Sentinel performer used when the resource column is missing or empty.
/// Excluded from social-network construction.
pub const UNKNOWN_RESOURCE: &str = "UNKNOWN";

/// Seconds since the Unix epoch.
pub type Timestamp = i64;

/// Duration of one activity: waiting plus working time, in whole seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ExecutionTime(pub u64);

impl ExecutionTime {
    pub fn seconds(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

/// A single recorded event: one activity performed for one case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub case_id: String,
    pub activity: String,
    pub resource: String,
    pub timestamp: Timestamp,
    /// Extra CSV columns, kept verbatim but otherwise unused.
    pub extras: Vec<(String, String)>,
}

impl Event {
    pub fn new(
        case_id: impl Into<String>,
        activity: impl Into<String>,
        resource: impl Into<String>,
        timestamp: Timestamp,
    ) -> Self {
        Event {
            case_id: case_id.into(),
            activity: activity.into(),
            resource: resource.into(),
            timestamp,
            extras: Vec::new(),
        }
    }
}

/// One case: the ordered event sequence of a single process instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn new(case_id: impl Into<String>, mut events: Vec<Event>) -> Self {
        // Stable: equal timestamps keep their input order.
        events.sort_by_key(|e| e.timestamp);
        Trace {
            case_id: case_id.into(),
            events,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Timestamp of the first event.
    pub fn start_time(&self) -> Timestamp {
        self.events.first().map(|e| e.timestamp).unwrap_or(0)
    }

    /// Activity labels in order.
    pub fn activity_sequence(&self) -> Vec<&str> {
        self.events.iter().map(|e| e.activity.as_str()).collect()
    }
}

/// A set of traces together with the activity and resource rosters.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    pub traces: Vec<Trace>,
    pub activities: BTreeSet<String>,
    pub resources: BTreeSet<String>,
}

impl EventLog {
    /// Builds a log from traces, deriving the activity/resource rosters.
    /// Case ids must be unique across traces.
    pub fn from_traces(traces: Vec<Trace>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for t in &traces {
            if !seen.insert(t.case_id.clone()) {
                return Err(Error::Consistency(format!(
                    "duplicate case id `{}`",
                    t.case_id
                )));
            }
        }
        let mut activities = BTreeSet::new();
        let mut resources = BTreeSet::new();
        for t in &traces {
            for e in &t.events {
                activities.insert(e.activity.clone());
                resources.insert(e.resource.clone());
            }
        }
        Ok(EventLog {
            traces,
            activities,
            resources,
        })
    }

    pub fn num_traces(&self) -> usize {
        self.traces.len()
    }

    pub fn num_events(&self) -> usize {
        self.traces.iter().map(|t| t.events.len()).sum()
    }

    /// Distinct activity sequences with their multiplicities, ordered by
    /// first appearance.
    pub fn variants(&self) -> Vec<(Vec<String>, usize)> {
        let mut out: Vec<(Vec<String>, usize)> = Vec::new();
        for t in &self.traces {
            let seq: Vec<String> = t.events.iter().map(|e| e.activity.clone()).collect();
            match out.iter_mut().find(|(s, _)| *s == seq) {
                Some((_, n)) => *n += 1,
                None => out.push((seq, 1)),
            }
        }
        out
    }
}

/// How the timestamp column is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimestampFormat {
    /// ISO-8601 / RFC 3339, e.g. `2017-03-01T10:15:00Z`; a naive
    /// `YYYY-MM-DD HH:MM:SS` (or with `T`) is read as UTC.
    Iso8601,
    /// Integer seconds since the Unix epoch.
    EpochSeconds,
}

impl std::str::FromStr for TimestampFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iso8601" | "iso-8601" | "iso" => Ok(TimestampFormat::Iso8601),
            "epoch" | "epoch-seconds" | "unix" => Ok(TimestampFormat::EpochSeconds),
            other => Err(Error::Argument(format!(
                "unknown timestamp format `{other}` (expected iso8601 or epoch)"
            ))),
        }
    }
}

fn parse_timestamp(raw: &str, format: TimestampFormat) -> std::result::Result<Timestamp, String> {
    let raw = raw.trim();
    match format {
        TimestampFormat::EpochSeconds => raw
            .parse::<i64>()
            .map_err(|_| format!("`{raw}` is not an integer epoch timestamp")),
        TimestampFormat::Iso8601 => {
            if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
                return Ok(dt.with_timezone(&Utc).timestamp());
            }
            for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
                if let Ok(naive) = NaiveDateTime::parse_from_str(raw, fmt) {
                    return Ok(naive.and_utc().timestamp());
                }
            }
            Err(format!("`{raw}` is not an ISO-8601 timestamp"))
        }
    }
}

/// Names of the four log columns in the CSV header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub case_id: String,
    pub activity: String,
    pub resource: String,
    pub timestamp: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            case_id: "case_id".into(),
            activity: "activity".into(),
            resource: "resource".into(),
            timestamp: "timestamp".into(),
        }
    }
}

/// Parses an RFC-4180 CSV file into an event log.
///
/// One trace per distinct case id; within a trace events are sorted by
/// timestamp with file order breaking ties. A missing or empty resource
/// column maps to [`UNKNOWN_RESOURCE`].
pub fn parse_csv(
    path: impl AsRef<Path>,
    columns: &ColumnMap,
    format: TimestampFormat,
) -> Result<EventLog> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_csv_reader(file, columns, format)
}

/// Same as [`parse_csv`] but over any reader, for tests and pipes.
pub fn parse_csv_reader(
    reader: impl std::io::Read,
    columns: &ColumnMap,
    format: TimestampFormat,
) -> Result<EventLog> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|_| Error::EmptyLog("no CSV header".into()))?
        .clone();
    if headers.is_empty() {
        return Err(Error::EmptyLog("no CSV header".into()));
    }

    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let idx_case = find(&columns.case_id)?;
    let idx_act = find(&columns.activity)?;
    let idx_res = headers.iter().position(|h| h == columns.resource);
    let idx_ts = find(&columns.timestamp)?;
    let core_idx: Vec<usize> = {
        let mut v = vec![idx_case, idx_act, idx_ts];
        if let Some(i) = idx_res {
            v.push(i);
        }
        v
    };

    // Accumulate per case in first-appearance order so file order is the
    // timestamp tie-break.
    let mut case_order: Vec<String> = Vec::new();
    let mut by_case: std::collections::HashMap<String, Vec<Event>> =
        std::collections::HashMap::new();

    for (row_no, record) in rdr.records().enumerate() {
        let line = row_no + 2; // 1-based, after the header
        let record = record.map_err(|e| Error::Row {
            line,
            message: e.to_string(),
        })?;
        let case_id = record.get(idx_case).unwrap_or("").trim().to_string();
        let activity = record.get(idx_act).unwrap_or("").trim().to_string();
        if case_id.is_empty() || activity.is_empty() {
            return Err(Error::Row {
                line,
                message: "case id and activity must be non-empty".into(),
            });
        }
        let resource = idx_res
            .and_then(|i| record.get(i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .unwrap_or(UNKNOWN_RESOURCE)
            .to_string();
        let raw_ts = record.get(idx_ts).unwrap_or("");
        let timestamp = parse_timestamp(raw_ts, format)
            .map_err(|message| Error::Row { line, message })?;

        let extras: Vec<(String, String)> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| !core_idx.contains(i))
            .map(|(i, h)| (h.to_string(), record.get(i).unwrap_or("").to_string()))
            .collect();

        if !by_case.contains_key(&case_id) {
            case_order.push(case_id.clone());
        }
        by_case.entry(case_id.clone()).or_default().push(Event {
            case_id,
            activity,
            resource,
            timestamp,
            extras,
        });
    }

    if case_order.is_empty() {
        return Err(Error::EmptyLog("file contains no event rows".into()));
    }

    let traces = case_order
        .into_iter()
        .map(|cid| {
            let events = by_case.remove(&cid).unwrap();
            Trace::new(cid, events)
        })
        .collect();
    EventLog::from_traces(traces)
}

/// Writes the log back in the same CSV schema it is parsed from.
/// Extra columns captured at parse time are re-emitted after the core four.
pub fn write_csv(log: &EventLog, path: impl AsRef<Path>, columns: &ColumnMap) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let extra_headers: Vec<String> = log
        .traces
        .first()
        .and_then(|t| t.events.first())
        .map(|e| e.extras.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();

    let mut header = vec![
        columns.case_id.clone(),
        columns.activity.clone(),
        columns.resource.clone(),
        columns.timestamp.clone(),
    ];
    header.extend(extra_headers.iter().cloned());
    wtr.write_record(&header)?;

    for trace in &log.traces {
        for e in &trace.events {
            let mut row = vec![
                e.case_id.clone(),
                e.activity.clone(),
                e.resource.clone(),
                e.timestamp.to_string(),
            ];
            for name in &extra_headers {
                let val = e
                    .extras
                    .iter()
                    .find(|(k, _)| k == name)
                    .map(|(_, v)| v.clone())
                    .unwrap_or_default();
                row.push(val);
            }
            wtr.write_record(&row)?;
        }
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::Format(e.to_string()))?;
    crate::util::write_atomic(path.as_ref(), &bytes)
}

/// Per-event durations: event 0 gets 0, event i>0 gets the backward
/// difference of timestamps.
pub fn execution_times(trace: &Trace) -> Vec<(String, ExecutionTime)> {
    let mut out = Vec::with_capacity(trace.events.len());
    let mut prev: Option<Timestamp> = None;
    for e in &trace.events {
        let dur = match prev {
            None => 0,
            Some(p) => (e.timestamp - p).max(0) as u64,
        };
        out.push((e.activity.clone(), ExecutionTime(dur)));
        prev = Some(e.timestamp);
    }
    out
}

/// Seconds from the event at `index` to the trace's last event.
pub fn remaining_time(trace: &Trace, index: usize) -> Result<u64> {
    if index >= trace.events.len() {
        return Err(Error::Argument(format!(
            "event index {index} out of range for trace of length {}",
            trace.events.len()
        )));
    }
    let last = trace.events.last().unwrap().timestamp;
    Ok((last - trace.events[index].timestamp).max(0) as u64)
}

/// Splits the log into train/test by trace start time: traces are sorted by
/// start time (ties by case id), the first ceil(fraction * n) go to train.
pub fn temporal_split(log: &EventLog, fraction: f64) -> Result<(EventLog, EventLog)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Argument(format!(
            "split fraction must be in (0,1), got {fraction}"
        )));
    }
    if log.traces.is_empty() {
        return Err(Error::EmptyLog("cannot split an empty log".into()));
    }
    let mut order: Vec<&Trace> = log.traces.iter().collect();
    order.sort_by(|a, b| {
        a.start_time()
            .cmp(&b.start_time())
            .then_with(|| a.case_id.cmp(&b.case_id))
    });
    let n = order.len();
    let n_train = ((fraction * n as f64).ceil() as usize).min(n);
    let train: Vec<Trace> = order[..n_train].iter().map(|t| (*t).clone()).collect();
    let test: Vec<Trace> = order[n_train..].iter().map(|t| (*t).clone()).collect();
    Ok((EventLog::from_traces(train)?, EventLog::from_traces(test)?))
}

/// Renders a short human summary (trace/event counts, rosters).
pub fn summary(log: &EventLog) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "traces: {}  events: {}",
        log.num_traces(),
        log.num_events()
    );
    let _ = writeln!(
        s,
        "activities ({}): {}",
        log.activities.len(),
        log.activities
            .iter()
            .cloned()
            .collect::<Vec<_>>()
            .join(", ")
    );
    let _ = writeln!(
        s,
        "resources ({}): {}",
        log.resources.len(),
        log.resources.iter().cloned().collect::<Vec<_>>().join(", ")
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::table1_log;

    fn trace_with_times(times: &[i64]) -> Trace {
        let events = times
            .iter()
            .enumerate()
            .map(|(i, &t)| Event::new("c", format!("a{i}"), "r", t))
            .collect();
        Trace::new("c", events)
    }

    #[test]
    fn table1_parses_to_five_traces() {
        let log = table1_log();
        assert_eq!(log.num_traces(), 5);
        assert_eq!(
            log.activities.iter().cloned().collect::<Vec<_>>(),
            vec!["A", "B", "C", "D", "E"]
        );
        assert_eq!(log.resources.len(), 6);
    }

    #[test]
    fn single_row_file() {
        let csv = "case_id,activity,resource,timestamp\nc1,A,John,100\n";
        let log = parse_csv_reader(
            csv.as_bytes(),
            &ColumnMap::default(),
            TimestampFormat::EpochSeconds,
        )
        .unwrap();
        assert_eq!(log.num_traces(), 1);
        assert_eq!(log.traces[0].len(), 1);
    }

    #[test]
    fn interleaved_cases_sorted_by_timestamp() {
        let csv = "case_id,activity,resource,timestamp\n\
                   c1,A,x,300\nc2,A,x,100\nc1,B,x,100\nc2,B,x,400\n";
        let log = parse_csv_reader(
            csv.as_bytes(),
            &ColumnMap::default(),
            TimestampFormat::EpochSeconds,
        )
        .unwrap();
        assert_eq!(log.num_traces(), 2);
        assert_eq!(log.traces[0].activity_sequence(), vec!["B", "A"]);
        assert_eq!(log.traces[1].activity_sequence(), vec!["A", "B"]);
    }

    #[test]
    fn missing_column_names_it() {
        let csv = "case_id,activity,timestamp\nc1,A,100\n";
        let mut cols = ColumnMap::default();
        cols.timestamp = "ts".into();
        let err = parse_csv_reader(csv.as_bytes(), &cols, TimestampFormat::EpochSeconds)
            .unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "ts"));
    }

    #[test]
    fn bad_timestamp_reports_line() {
        let csv = "case_id,activity,resource,timestamp\nc1,A,x,100\nc1,B,x,oops\n";
        let err = parse_csv_reader(
            csv.as_bytes(),
            &ColumnMap::default(),
            TimestampFormat::EpochSeconds,
        )
        .unwrap_err();
        match err {
            Error::Row { line, .. } => assert_eq!(line, 3),
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let csv = "case_id,activity,resource,timestamp\n";
        let err = parse_csv_reader(
            csv.as_bytes(),
            &ColumnMap::default(),
            TimestampFormat::EpochSeconds,
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyLog(_)));
    }

    #[test]
    fn missing_resource_maps_to_unknown() {
        let csv = "case_id,activity,timestamp\nc1,A,100\n";
        let mut cols = ColumnMap::default();
        let log =
            parse_csv_reader(csv.as_bytes(), &cols, TimestampFormat::EpochSeconds).unwrap();
        assert_eq!(log.traces[0].events[0].resource, UNKNOWN_RESOURCE);
        cols.resource = "who".into();
        let csv2 = "case_id,activity,who,timestamp\nc1,A,,100\n";
        let log2 =
            parse_csv_reader(csv2.as_bytes(), &cols, TimestampFormat::EpochSeconds).unwrap();
        assert_eq!(log2.traces[0].events[0].resource, UNKNOWN_RESOURCE);
    }

    #[test]
    fn iso8601_timestamps_parse() {
        let csv = "case_id,activity,resource,timestamp\n\
                   c1,A,x,1970-01-01T00:01:40Z\nc1,B,x,1970-01-01 00:03:20\n";
        let log = parse_csv_reader(
            csv.as_bytes(),
            &ColumnMap::default(),
            TimestampFormat::Iso8601,
        )
        .unwrap();
        assert_eq!(log.traces[0].events[0].timestamp, 100);
        assert_eq!(log.traces[0].events[1].timestamp, 200);
    }

    #[test]
    fn execution_times_are_backward_differences() {
        let t = trace_with_times(&[100, 160, 160]);
        let times: Vec<u64> = execution_times(&t).iter().map(|(_, d)| d.0).collect();
        assert_eq!(times, vec![0, 60, 0]);

        let single = trace_with_times(&[42]);
        assert_eq!(execution_times(&single)[0].1, ExecutionTime(0));

        let pair = trace_with_times(&[0, 90]);
        assert_eq!(execution_times(&pair)[1].1, ExecutionTime(90));
    }

    #[test]
    fn execution_times_sum_to_span() {
        let t = trace_with_times(&[10, 25, 99, 1000]);
        let total: u64 = execution_times(&t).iter().map(|(_, d)| d.0).sum();
        assert_eq!(total, 990);
    }

    #[test]
    fn remaining_time_examples() {
        let t = trace_with_times(&[0, 50, 200]);
        assert_eq!(remaining_time(&t, 1).unwrap(), 150);
        assert_eq!(remaining_time(&t, 2).unwrap(), 0);
        let flat = trace_with_times(&[10, 10, 10]);
        assert_eq!(remaining_time(&flat, 0).unwrap(), 0);
        assert!(remaining_time(&t, 3).is_err());
    }

    #[test]
    fn remaining_time_non_increasing() {
        let t = trace_with_times(&[0, 5, 5, 80, 200]);
        let mut prev = u64::MAX;
        for i in 0..t.len() {
            let r = remaining_time(&t, i).unwrap();
            assert!(r <= prev);
            prev = r;
        }
    }

    #[test]
    fn split_80_20() {
        let traces: Vec<Trace> = (0..10)
            .map(|i| {
                Trace::new(
                    format!("c{i}"),
                    vec![Event::new(format!("c{i}"), "A", "r", i * 100)],
                )
            })
            .collect();
        let log = EventLog::from_traces(traces).unwrap();
        let (train, test) = temporal_split(&log, 0.8).unwrap();
        assert_eq!(train.num_traces(), 8);
        assert_eq!(test.num_traces(), 2);
        let max_train = train.traces.iter().map(|t| t.start_time()).max().unwrap();
        assert!(test.traces.iter().all(|t| t.start_time() >= max_train));
    }

    #[test]
    fn split_single_trace() {
        let log = EventLog::from_traces(vec![Trace::new(
            "c0",
            vec![Event::new("c0", "A", "r", 0)],
        )])
        .unwrap();
        let (train, test) = temporal_split(&log, 0.8).unwrap();
        assert_eq!(train.num_traces(), 1);
        assert_eq!(test.num_traces(), 0);
    }

    #[test]
    fn split_is_deterministic_under_ties() {
        let traces: Vec<Trace> = ["e", "b", "d", "a", "c"]
            .iter()
            .map(|id| Trace::new(*id, vec![Event::new(*id, "A", "r", 500)]))
            .collect();
        let log = EventLog::from_traces(traces).unwrap();
        let (tr1, te1) = temporal_split(&log, 0.8).unwrap();
        let (tr2, te2) = temporal_split(&log, 0.8).unwrap();
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);
        let ids: Vec<&str> = tr1.traces.iter().map(|t| t.case_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b", "c", "d"]);
    }

    #[test]
    fn split_partitions_the_log() {
        let log = table1_log();
        let (train, test) = temporal_split(&log, 0.6).unwrap();
        assert_eq!(train.num_traces() + test.num_traces(), log.num_traces());
        for t in train.traces.iter().chain(test.traces.iter()) {
            assert!(log.traces.iter().any(|orig| orig == t));
        }
    }

    #[test]
    fn bad_fraction_rejected() {
        let log = table1_log();
        assert!(temporal_split(&log, 0.0).is_err());
        assert!(temporal_split(&log, 1.0).is_err());
        assert!(temporal_split(&log, -0.5).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let log = table1_log();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        write_csv(&log, &path, &ColumnMap::default()).unwrap();
        let reparsed = parse_csv(&path, &ColumnMap::default(), TimestampFormat::EpochSeconds)
            .unwrap();
        assert_eq!(log, reparsed);
    }
}
