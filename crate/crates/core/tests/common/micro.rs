//! Hand-scheduled two-station instances and their expected event logs.

use edgefed::simcore::TraceRecord;
use edgefed::workload::TaskRequest;
use edgefed::{PolicyKind, SimConfig, Simulation};

use super::request;

pub type Row = (f64, &'static str, Option<u64>, Option<u32>, Option<&'static str>);

pub const ARR: &str = "TaskArrival";
pub const START: &str = "ExecutionStart";
pub const DONE: &str = "ExecutionComplete";
pub const XFER: &str = "TransferComplete";
pub const REFRESH: &str = "MatrixRefresh";

const Q: &str = "Queued";
const X: &str = "Executing";
const OK: &str = "CompletedOnTime";

pub fn trace(cfg: &SimConfig, reqs: &[TaskRequest], policy: PolicyKind) -> (Vec<TraceRecord>, Simulation) {
    let mut sim = Simulation::new(cfg, reqs, policy, 0).unwrap();
    let mut out = Vec::new();
    while let Some(r) = sim.step().unwrap() {
        out.push(r);
    }
    (out, sim)
}

pub fn rows(trace: &[TraceRecord]) -> Vec<Row> {
    trace
        .iter()
        .map(|r| (r.time, r.kind, r.task.map(|t| t.0), r.station.map(|s| s.0), r.status.map(|s| s.as_str())))
        .collect()
}

fn ev(t: f64, kind: &'static str, task: u64, station: u32, status: &'static str) -> Row {
    (t, kind, Some(task), Some(station), Some(status))
}

fn refresh(t: f64) -> Row {
    (t, REFRESH, None, None, None)
}

/// Six tasks under NR on [`super::tiny_config`]. With six tasks every
/// completion triggers a refresh.
pub fn no_redirection() -> (Vec<TaskRequest>, Vec<Row>) {
    let reqs = vec![
        request(0.0, 0, 1000.0, 0),
        request(0.25, 0, 500.0, 0),
        request(0.0, 0, 4000.0, 1),
        request(0.5, 0, 2000.0, 1),
        request(0.75, 0, 1000.0, 1),
        request(1.0, 1, 2000.0, 0),
    ];
    let expected = vec![
        ev(0.25, ARR, 0, 0, Q),
        ev(0.25, START, 0, 0, X),
        ev(0.25, ARR, 2, 1, Q),
        ev(0.25, START, 2, 1, X),
        ev(0.5, ARR, 1, 0, Q),
        ev(0.75, ARR, 3, 1, Q),
        ev(0.75, START, 3, 1, X),
        ev(1.0, ARR, 4, 1, Q),
        // Completion outranks the simultaneous arrival.
        ev(1.25, DONE, 0, 0, OK),
        ev(1.25, START, 1, 0, X),
        ev(1.25, ARR, 5, 0, Q),
        refresh(1.25),
        ev(1.75, DONE, 3, 1, OK),
        ev(1.75, DONE, 1, 0, OK),
        ev(1.75, START, 4, 1, X),
        ev(1.75, START, 5, 0, X),
        refresh(1.75),
        refresh(1.75),
        ev(2.25, DONE, 2, 1, OK),
        ev(2.25, DONE, 4, 1, OK),
        refresh(2.25),
        refresh(2.25),
        // Urgent with zero slack: due at 2.75, delivered at 4.25.
        ev(3.75, DONE, 5, 0, "CompletedLate"),
        refresh(3.75),
    ];
    (reqs, expected)
}

/// Four tasks under MECT. Station 0's tasks move to the faster station 1,
/// and every arrival precedes the first completion, so only priors matter.
pub fn mect_heterogeneous() -> (Vec<TaskRequest>, Vec<Row>) {
    let reqs = vec![
        request(0.0, 0, 1000.0, 0),
        request(0.0, 0, 2000.0, 1),
        request(0.25, 0, 1000.0, 0),
        request(0.5, 0, 3000.0, 1),
    ];
    let expected = vec![
        ev(0.25, ARR, 0, 0, "Transferring"),
        ev(0.25, ARR, 1, 1, Q),
        ev(0.25, START, 1, 1, X),
        ev(0.5, ARR, 2, 0, "Transferring"),
        ev(0.75, ARR, 3, 1, Q),
        ev(0.75, START, 3, 1, X),
        ev(1.25, DONE, 1, 1, OK),
        refresh(1.25),
        ev(2.25, DONE, 3, 1, OK),
        ev(2.25, XFER, 0, 1, Q),
        ev(2.25, START, 0, 1, X),
        refresh(2.25),
        ev(2.5, XFER, 2, 1, Q),
        ev(2.5, START, 2, 1, X),
        ev(2.75, DONE, 0, 1, OK),
        refresh(2.75),
        ev(3.0, DONE, 2, 1, OK),
        refresh(3.0),
    ];
    (reqs, expected)
}
