use std::collections::VecDeque;

use crate::ids::{StationId, TaskId};
use crate::stochastic::{ProfileKind, ProfileMatrix};

use super::task::Position;

/// Static capacity and live occupancy of one Base Station.
#[derive(Debug, Clone)]
pub struct BaseStationState {
    pub id: StationId,
    pub position: Position,
    pub core_count: usize,
    pub mips_per_core: f64,
    pub neighbor_ids: Vec<StationId>,
    /// FCFS batch queue of tasks waiting for a core.
    pub queue: VecDeque<TaskId>,
    /// Absolute time each core becomes free; stale entries mean idle.
    pub vm_busy_until: Vec<f64>,
    running: Vec<Option<TaskId>>,
    /// Transfer-time profiles towards each neighbor.
    pub ett: ProfileMatrix,
}

impl BaseStationState {
    pub fn new(
        id: StationId,
        position: Position,
        core_count: usize,
        mips_per_core: f64,
        neighbor_ids: Vec<StationId>,
    ) -> Self {
        Self {
            id,
            position,
            core_count,
            mips_per_core,
            neighbor_ids,
            queue: VecDeque::new(),
            vm_busy_until: vec![0.0; core_count],
            running: vec![None; core_count],
            ett: ProfileMatrix::with_priors(ProfileKind::Ett, []),
        }
    }

    /// Lowest-index idle core.
    pub fn free_core(&self) -> Option<usize> {
        self.running.iter().position(Option::is_none)
    }

    pub fn busy_cores(&self) -> usize {
        self.running.iter().filter(|r| r.is_some()).count()
    }

    pub fn running_on(&self, core: usize) -> Option<TaskId> {
        self.running[core]
    }

    pub(crate) fn occupy(&mut self, core: usize, task: TaskId, until: f64) {
        debug_assert!(self.running[core].is_none());
        self.running[core] = Some(task);
        self.vm_busy_until[core] = until;
    }

    pub(crate) fn release(&mut self, core: usize) -> Option<TaskId> {
        self.running[core].take()
    }
}
