//! Synthetic vehicular workload.
//!
//! Requests form a Poisson process whose rate scales with the number of
//! vehicles. Each request gets a type, a uniform position in the service
//! area, a length drawn from its type's range, and is routed to the nearest
//! station.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Uniform};
use serde::{Deserialize, Serialize};

use crate::config::StationSpec;
use crate::error::{Error, Result};
use crate::ids::{StationId, TaskTypeId};
use crate::simcore::Position;

/// One entry of the task-type catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskTypeSpec {
    pub type_id: TaskTypeId,
    pub name: String,
    pub urgent: bool,
    /// Inclusive range of compute demand in MI, sampled uniformly.
    pub length_range: [f64; 2],
    /// Megabits.
    pub data_size_up: f64,
    /// Megabits.
    pub data_size_down: f64,
    /// Deadline slack in seconds.
    pub slack: f64,
    pub requests_per_vehicle_per_hour: f64,
}

impl TaskTypeSpec {
    pub fn mean_length(&self) -> f64 {
        0.5 * (self.length_range[0] + self.length_range[1])
    }
}

/// Two urgent and two non-urgent vehicular services.
pub fn default_catalog() -> Vec<TaskTypeSpec> {
    let urgent = |id, name: &str| TaskTypeSpec {
        type_id: TaskTypeId(id),
        name: name.to_string(),
        urgent: true,
        length_range: [2000.0, 3000.0],
        data_size_up: 0.8,
        data_size_down: 0.2,
        slack: DEFAULT_URGENT_SLACK,
        requests_per_vehicle_per_hour: DEFAULT_REQUESTS_PER_TYPE,
    };
    let relaxed = |id, name: &str| TaskTypeSpec {
        type_id: TaskTypeId(id),
        name: name.to_string(),
        urgent: false,
        length_range: [10000.0, 15000.0],
        data_size_up: 8.0,
        data_size_down: 24.0,
        slack: DEFAULT_NON_URGENT_SLACK,
        requests_per_vehicle_per_hour: DEFAULT_REQUESTS_PER_TYPE,
    };
    vec![
        urgent(0, "hazard_alert"),
        urgent(1, "lane_change_warning"),
        relaxed(2, "onboard_entertainment"),
        relaxed(3, "fuel_usage_statistics"),
    ]
}

/// Per type, per vehicle, per hour. Puts the No Redirection miss rate at
/// 4,000 vehicles inside the 20 to 40 percent band.
pub const DEFAULT_REQUESTS_PER_TYPE: f64 = 1.25;
pub const DEFAULT_URGENT_SLACK: f64 = 1.0;
pub const DEFAULT_NON_URGENT_SLACK: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub vehicle_count: u64,
    /// Seconds of arrivals.
    pub duration: f64,
    /// Forces this share of urgent requests; catalog rates decide otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub urgent_fraction: Option<f64>,
    /// Width and height of the service area in meters.
    pub area: [f64; 2],
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            vehicle_count: 4000,
            duration: 3600.0,
            urgent_fraction: None,
            area: [5000.0, 3000.0],
        }
    }
}

/// A generated request before the simulator assigns its deadline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRequest {
    /// Issue time at the vehicle, seconds.
    pub time: f64,
    pub type_id: TaskTypeId,
    pub length: f64,
    pub position: Position,
    pub data_size_up: f64,
    pub data_size_down: f64,
    pub receiving_station: StationId,
}

/// Closest station by Euclidean distance; ties go to the lower id.
pub fn nearest_station(position: Position, stations: &[StationSpec]) -> Option<StationId> {
    stations
        .iter()
        .map(|s| (position.distance_squared(&s.position), s.id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

/// Aggregate arrival rate in requests per second.
pub fn arrival_rate(cfg: &WorkloadConfig, types: &[TaskTypeSpec]) -> f64 {
    let per_vehicle: f64 = types.iter().map(|t| t.requests_per_vehicle_per_hour).sum();
    cfg.vehicle_count as f64 * per_vehicle / 3600.0
}

/// Draws a time-ordered request trace. Identical inputs give identical traces.
pub fn generate(
    cfg: &WorkloadConfig,
    types: &[TaskTypeSpec],
    stations: &[StationSpec],
    seed: u64,
) -> Result<Vec<TaskRequest>> {
    if stations.is_empty() {
        return Err(Error::invalid("stations", "at least one station is required"));
    }
    if types.is_empty() {
        return Err(Error::invalid("task_types", "at least one task type is required"));
    }
    let lambda = arrival_rate(cfg, types);
    if lambda.is_nan() || lambda <= 0.0 || cfg.duration <= 0.0 {
        return Ok(Vec::new());
    }
    let picker = TypePicker::new(types, cfg.urgent_fraction)?;
    let gap = Exp::new(lambda).map_err(|e| Error::invalid("workload", e.to_string()))?;
    let xs = Uniform::new_inclusive(0.0, cfg.area[0]).map_err(|e| Error::invalid("workload.area", e.to_string()))?;
    let ys = Uniform::new_inclusive(0.0, cfg.area[1]).map_err(|e| Error::invalid("workload.area", e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity((lambda * cfg.duration * 1.05) as usize + 16);
    let mut t = 0.0;
    loop {
        t += gap.sample(&mut rng);
        if t > cfg.duration {
            break;
        }
        let ty = picker.pick(&mut rng);
        let [lo, hi] = ty.length_range;
        let length = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let position = Position::new(xs.sample(&mut rng), ys.sample(&mut rng));
        out.push(TaskRequest {
            time: t,
            type_id: ty.type_id,
            length,
            position,
            data_size_up: ty.data_size_up,
            data_size_down: ty.data_size_down,
            receiving_station: nearest_station(position, stations).expect("non-empty stations"),
        });
    }
    Ok(out)
}

struct TypePicker<'a> {
    urgent: Vec<&'a TaskTypeSpec>,
    relaxed: Vec<&'a TaskTypeSpec>,
    all: Vec<&'a TaskTypeSpec>,
    urgent_fraction: Option<f64>,
}

impl<'a> TypePicker<'a> {
    fn new(types: &'a [TaskTypeSpec], urgent_fraction: Option<f64>) -> Result<Self> {
        let (urgent, relaxed): (Vec<_>, Vec<_>) = types.iter().partition(|t| t.urgent);
        if let Some(f) = urgent_fraction {
            if f > 0.0 && urgent.is_empty() || f < 1.0 && relaxed.is_empty() {
                return Err(Error::invalid(
                    "workload.urgent_fraction",
                    "catalog lacks the urgency class this fraction requires",
                ));
            }
        }
        Ok(Self {
            urgent,
            relaxed,
            all: types.iter().collect(),
            urgent_fraction,
        })
    }

    fn pick<R: Rng>(&self, rng: &mut R) -> &'a TaskTypeSpec {
        match self.urgent_fraction {
            Some(f) => {
                let class = if rng.random::<f64>() < f {
                    &self.urgent
                } else {
                    &self.relaxed
                };
                weighted(class, rng)
            }
            None => weighted(&self.all, rng),
        }
    }
}

fn weighted<'a, R: Rng>(types: &[&'a TaskTypeSpec], rng: &mut R) -> &'a TaskTypeSpec {
    let total: f64 = types.iter().map(|t| t.requests_per_vehicle_per_hour).sum();
    if total <= 0.0 {
        return types[rng.random_range(0..types.len())];
    }
    let mut u = rng.random::<f64>() * total;
    for t in types {
        u -= t.requests_per_vehicle_per_hour;
        if u < 0.0 {
            return t;
        }
    }
    types[types.len() - 1]
}

const TRACE_HEADER: &str = "# time\ttype\tlength\tx\ty\tdata_size_up\tdata_size_down";

/// Writes a replayable trace, one request per line.
pub fn write_trace(requests: &[TaskRequest], sink: &mut dyn Write) -> Result<()> {
    writeln!(sink, "{TRACE_HEADER}")?;
    for r in requests {
        writeln!(
            sink,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.time, r.type_id, r.length, r.position.x, r.position.y, r.data_size_up, r.data_size_down
        )?;
    }
    Ok(())
}

/// Reads a trace written by [`write_trace`], re-deriving receiving stations.
pub fn read_trace(source: &mut dyn BufRead, stations: &[StationSpec]) -> Result<Vec<TaskRequest>> {
    if stations.is_empty() {
        return Err(Error::invalid("stations", "at least one station is required"));
    }
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 7 {
            return Err(Error::Trace {
                line: line_no,
                reason: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let num = |k: usize| -> Result<f64> {
            fields[k].parse::<f64>().map_err(|e| Error::Trace {
                line: line_no,
                reason: format!("field {}: {e}", k + 1),
            })
        };
        let type_id = fields[1].parse::<u32>().map_err(|e| Error::Trace {
            line: line_no,
            reason: format!("type: {e}"),
        })?;
        let position = Position::new(num(3)?, num(4)?);
        out.push(TaskRequest {
            time: num(0)?,
            type_id: TaskTypeId(type_id),
            length: num(2)?,
            position,
            data_size_up: num(5)?,
            data_size_down: num(6)?,
            receiving_station: nearest_station(position, stations).expect("non-empty stations"),
        });
    }
    Ok(out)
}
