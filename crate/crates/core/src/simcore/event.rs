use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::ids::{StationId, TaskId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    TaskArrival {
        task: TaskId,
    },
    TransferComplete {
        task: TaskId,
        destination: StationId,
    },
    ExecutionStart {
        task: TaskId,
        station: StationId,
        core: usize,
    },
    ExecutionComplete {
        task: TaskId,
        station: StationId,
        core: usize,
    },
    MatrixRefresh,
}

impl EventKind {
    /// Same-time ordering: completions, then arrivals, then refresh.
    fn priority(&self) -> u8 {
        match self {
            EventKind::ExecutionComplete { .. } => 0,
            EventKind::TransferComplete { .. } => 1,
            EventKind::ExecutionStart { .. } => 2,
            EventKind::TaskArrival { .. } => 3,
            EventKind::MatrixRefresh => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EventKind::TaskArrival { .. } => "TaskArrival",
            EventKind::TransferComplete { .. } => "TransferComplete",
            EventKind::ExecutionStart { .. } => "ExecutionStart",
            EventKind::ExecutionComplete { .. } => "ExecutionComplete",
            EventKind::MatrixRefresh => "MatrixRefresh",
        }
    }

    pub fn task(&self) -> Option<TaskId> {
        match *self {
            EventKind::TaskArrival { task }
            | EventKind::TransferComplete { task, .. }
            | EventKind::ExecutionStart { task, .. }
            | EventKind::ExecutionComplete { task, .. } => Some(task),
            EventKind::MatrixRefresh => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
    /// Insertion sequence number, the final tie-breaker.
    pub seq: u64,
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.kind.priority().cmp(&other.kind.priority()))
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Default)]
pub(crate) struct EventQueue {
    heap: BinaryHeap<Reverse<SimEvent>>,
    seq: u64,
}

impl EventQueue {
    pub fn push(&mut self, time: f64, kind: EventKind) {
        debug_assert!(time.is_finite());
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Reverse(SimEvent { time, kind, seq }));
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop().map(|Reverse(e)| e)
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }
}
