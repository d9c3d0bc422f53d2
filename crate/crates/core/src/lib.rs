//! edgefed: a discrete-event simulator of federated edge Base Stations that
//! serve deadline-constrained vehicular tasks.
//!
//! Each station's Load Balancer decides, at arrival, whether a task runs
//! locally, moves to a neighboring station, or is dropped. The
//! probability-driven policy estimates completion and transfer delays as
//! Normal distributions learned online and picks the destination most
//! likely to meet the task's deadline; three baselines are provided for
//! comparison.
//!
//! ```text
//!  workload ──▶ simcore (events, stations, network) ──▶ metrics
//!                  │            ▲
//!                  ▼            │ samples / refresh
//!             heuristics ◀── stochastic (ETC / ETT)
//! ```

pub mod config;
pub mod error;
pub mod heuristics;
pub mod ids;
pub mod metrics;
pub mod simcore;
pub mod stochastic;
pub mod sweep;
pub mod workload;

pub use config::{load_config, SimConfig, StationSpec};
pub use error::{Error, Result};
pub use heuristics::{AllocationContext, AllocationDecision, AllocationPolicy, Outcome, PolicyKind};
pub use ids::{StationId, TaskId, TaskTypeId};
pub use metrics::{aggregate, miss_rate, per_station_miss_rate, MetricsReport, TrialAggregate};
pub use simcore::{Simulation, Task, TaskStatus};
pub use stochastic::{convolve, prob_meet_deadline, standard_normal_cdf, NormalDist, ProfileMatrix};
pub use sweep::{run, run_sweep, SweepKind};
