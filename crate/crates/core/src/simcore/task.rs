use serde::{Deserialize, Serialize};

use crate::ids::{StationId, TaskId, TaskTypeId};

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_squared(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskStatus {
    Pending,
    Transferring,
    Queued,
    Executing,
    CompletedOnTime,
    CompletedLate,
    Dropped,
}

impl TaskStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskStatus::Pending => "Pending",
            TaskStatus::Transferring => "Transferring",
            TaskStatus::Queued => "Queued",
            TaskStatus::Executing => "Executing",
            TaskStatus::CompletedOnTime => "CompletedOnTime",
            TaskStatus::CompletedLate => "CompletedLate",
            TaskStatus::Dropped => "Dropped",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            TaskStatus::CompletedOnTime | TaskStatus::CompletedLate | TaskStatus::Dropped
        )
    }

    fn can_become(&self, next: TaskStatus) -> bool {
        use TaskStatus::*;
        matches!(
            (self, next),
            (Pending, Transferring)
                | (Pending, Queued)
                | (Pending, Dropped)
                | (Transferring, Queued)
                | (Queued, Executing)
                | (Executing, CompletedOnTime)
                | (Executing, CompletedLate)
        )
    }
}

/// One vehicular service request and its lifecycle bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub type_id: TaskTypeId,
    /// Compute demand in million instructions.
    pub length: f64,
    /// Megabits sent from the vehicle.
    pub data_size_up: f64,
    /// Megabits returned to the vehicle.
    pub data_size_down: f64,
    pub urgent: bool,
    pub origin_position: Position,
    /// Time the vehicle issued the request.
    pub arrival_time: f64,
    /// Absolute deadline for the result to be back at the vehicle.
    pub deadline: f64,
    pub receiving_station: StationId,
    pub executing_station: Option<StationId>,
    pub status: TaskStatus,
    pub transfer_start: Option<f64>,
    pub enqueue_time: Option<f64>,
    pub start_time: Option<f64>,
    pub completion_time: Option<f64>,
}

impl Task {
    pub fn was_transferred(&self) -> bool {
        matches!(self.executing_station, Some(s) if s != self.receiving_station)
    }

    /// Moves to `next`, panicking on a transition the lifecycle does not allow.
    pub fn set_status(&mut self, next: TaskStatus) {
        assert!(
            self.status.can_become(next),
            "task {}: illegal transition {:?} -> {:?}",
            self.id,
            self.status,
            next
        );
        self.status = next;
    }
}
