//! Fixtures shared by unit and integration tests.

use crate::eventlog::{parse_csv_reader, ColumnMap, Event, EventLog, Trace, TimestampFormat};
use crate::socialnet::SocialNetwork;

/// The five-case worked-example log, with increasing timestamps appended in
/// file order.
pub fn table1_log() -> EventLog {
    let rows = [
        ("Case1", "A", "John"),
        ("Case2", "A", "John"),
        ("Case3", "A", "Sue"),
        ("Case3", "B", "Carol"),
        ("Case1", "B", "Mike"),
        ("Case1", "C", "John"),
        ("Case2", "C", "Mike"),
        ("Case4", "A", "Sue"),
        ("Case2", "B", "John"),
        ("Case2", "D", "Pete"),
        ("Case5", "A", "Sue"),
        ("Case4", "C", "Carol"),
        ("Case1", "D", "Pete"),
        ("Case3", "C", "Sue"),
        ("Case3", "D", "Pete"),
        ("Case4", "B", "Sue"),
        ("Case5", "E", "Clare"),
        ("Case5", "D", "Clare"),
        ("Case4", "D", "Pete"),
    ];
    let mut csv = String::from("case_id,activity,resource,timestamp\n");
    for (i, (case, act, res)) in rows.iter().enumerate() {
        csv.push_str(&format!("{case},{act},{res},{}\n", (i + 1) * 100));
    }
    parse_csv_reader(
        csv.as_bytes(),
        &ColumnMap::default(),
        TimestampFormat::EpochSeconds,
    )
    .unwrap()
}

/// The six-performer network whose arithmetic matches the worked community
/// example: total weight 2.9, John's degree 1.3.
pub fn worked_example_network() -> SocialNetwork {
    let mut net = SocialNetwork::new();
    net.add_edge("John", "Sue", 0.9).unwrap();
    net.add_edge("John", "Mike", 0.2).unwrap();
    net.add_edge("John", "Carol", 0.2).unwrap();
    net.add_edge("Mike", "Carol", 1.0).unwrap();
    net.add_edge("Peter", "Clare", 0.6).unwrap();
    net
}

/// Builds a trace from (activity, resource, timestamp) triples.
pub fn trace_of(case_id: &str, events: &[(&str, &str, i64)]) -> Trace {
    Trace::new(
        case_id,
        events
            .iter()
            .map(|(a, r, t)| Event::new(case_id, *a, *r, *t))
            .collect(),
    )
}

/// Builds a log from per-trace (activity, resource, timestamp) triples.
pub fn log_of(traces: &[(&str, &[(&str, &str, i64)])]) -> EventLog {
    EventLog::from_traces(
        traces
            .iter()
            .map(|(cid, evs)| trace_of(cid, evs))
            .collect(),
    )
    .unwrap()
}
