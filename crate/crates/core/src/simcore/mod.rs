//! Discrete-event model of the Base Station federation.
//!
//! Stations run homogeneous cores behind one FCFS queue. Vehicles reach their
//! nearest station over WLAN; the Load Balancer there either keeps the task,
//! ships it to a neighbor over the LAN, or drops it.

mod engine;
mod event;
mod station;
mod task;

pub use engine::{Simulation, TraceRecord};
pub use event::{EventKind, SimEvent};
pub use station::BaseStationState;
pub use task::{Position, Task, TaskStatus};

use serde::{Deserialize, Serialize};

/// Link parameters shared by all stations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkModel {
    /// Vehicle to station bandwidth in megabits per second, both directions.
    pub wlan_bandwidth: f64,
    /// Fixed delay of one inter-station hop, seconds.
    pub lan_transfer_delay: f64,
    /// Backhaul bandwidth in megabits per second; only shapes the ETT prior.
    pub wan_bandwidth: f64,
    /// Route results of transferred tasks back through the receiving station
    /// (a second LAN hop) instead of straight to the vehicle.
    pub return_via_receiving: bool,
}

impl Default for NetworkModel {
    fn default() -> Self {
        Self {
            wlan_bandwidth: 200.0,
            lan_transfer_delay: 2.0,
            wan_bandwidth: 1000.0,
            return_via_receiving: false,
        }
    }
}

pub fn uplink_delay(task: &Task, net: &NetworkModel) -> f64 {
    task.data_size_up / net.wlan_bandwidth
}

pub fn downlink_delay(task: &Task, net: &NetworkModel) -> f64 {
    task.data_size_down / net.wlan_bandwidth
}

/// Absolute deadline: arrival + reference completion time + slack + the
/// vehicle's own uplink and downlink time.
pub fn compute_deadline(task: &Task, e_ref: f64, slack: f64, net: &NetworkModel) -> f64 {
    task.arrival_time + e_ref + slack + (uplink_delay(task, net) + downlink_delay(task, net))
}

/// Execution time of a task on one core of `station`.
pub fn service_time(task: &Task, station: &BaseStationState) -> f64 {
    task.length / station.mips_per_core
}
