//! Outcome counters, miss rates and trial aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::heuristics::PolicyKind;
use crate::ids::StationId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("miss rate undefined: the run generated no tasks")]
    NoTasks,
    #[error("miss rate undefined: station {0} executed nothing and dropped nothing")]
    IdleStation(StationId),
    #[error("station {0} is not part of the report")]
    UnknownStation(StationId),
    #[error("cannot aggregate an empty run list")]
    NoRuns,
    #[error("cannot aggregate runs of different setups ({0} vs {1})")]
    MixedRuns(String, String),
}

/// Outcome counters of one station (or the whole federation).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StationCounters {
    /// Tasks whose nearest station this is.
    pub received: u64,
    /// Tasks that finished execution here.
    pub executed: u64,
    pub completed_on_time: u64,
    pub completed_late: u64,
    /// Drops decided by this station's Load Balancer.
    pub dropped: u64,
    pub mean_queue_wait: f64,
    pub mean_e2e_delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub policy_name: String,
    pub seed: u64,
    pub config_digest: String,
    pub vehicles: u64,
    pub urgent_fraction: Option<f64>,
    pub transfers: u64,
    pub per_station: BTreeMap<StationId, StationCounters>,
    pub system: StationCounters,
}

impl MetricsReport {
    pub fn generated(&self) -> u64 {
        self.system.received
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Fraction of generated tasks that finished late or were dropped.
pub fn miss_rate(report: &MetricsReport) -> Result<f64, MetricsError> {
    let s = &report.system;
    if s.received == 0 {
        return Err(MetricsError::NoTasks);
    }
    Ok((s.completed_late + s.dropped) as f64 / s.received as f64)
}

/// Late plus dropped over executed plus dropped, for one station.
pub fn per_station_miss_rate(report: &MetricsReport, station: StationId) -> Result<f64, MetricsError> {
    let c = report
        .per_station
        .get(&station)
        .ok_or(MetricsError::UnknownStation(station))?;
    station_rate(c).ok_or(MetricsError::IdleStation(station))
}

fn station_rate(c: &StationCounters) -> Option<f64> {
    let denom = c.executed + c.dropped;
    (denom > 0).then(|| (c.completed_late + c.dropped) as f64 / denom as f64)
}

#[derive(Debug, Clone, Default)]
struct Accumulator {
    received: u64,
    executed: u64,
    on_time: u64,
    late: u64,
    dropped: u64,
    wait_sum: f64,
    e2e_sum: f64,
}

impl Accumulator {
    fn counters(&self) -> StationCounters {
        let mean = |sum: f64| if self.executed > 0 { sum / self.executed as f64 } else { 0.0 };
        StationCounters {
            received: self.received,
            executed: self.executed,
            completed_on_time: self.on_time,
            completed_late: self.late,
            dropped: self.dropped,
            mean_queue_wait: mean(self.wait_sum),
            mean_e2e_delay: mean(self.e2e_sum),
        }
    }
}

/// Single-owner collector filled by the event loop.
#[derive(Debug, Clone, Default)]
pub struct MetricsCollector {
    stations: BTreeMap<StationId, Accumulator>,
    transfers: u64,
    policy: String,
    seed: u64,
    digest: String,
    vehicles: u64,
    urgent_fraction: Option<f64>,
}

impl MetricsCollector {
    pub fn new(stations: impl IntoIterator<Item = StationId>) -> Self {
        Self {
            stations: stations.into_iter().map(|s| (s, Accumulator::default())).collect(),
            ..Self::default()
        }
    }

    pub fn with_identity(mut self, policy: PolicyKind, seed: u64, config: &SimConfig) -> Self {
        self.policy = policy.as_str().to_string();
        self.seed = seed;
        self.digest = config.digest();
        self.vehicles = config.workload.vehicle_count;
        self.urgent_fraction = config.workload.urgent_fraction;
        self
    }

    fn at(&mut self, s: StationId) -> &mut Accumulator {
        self.stations.entry(s).or_default()
    }

    pub fn record_received(&mut self, receiving: StationId) {
        self.at(receiving).received += 1;
    }

    pub fn record_drop(&mut self, receiving: StationId) {
        self.at(receiving).dropped += 1;
    }

    pub fn record_transfer(&mut self) {
        self.transfers += 1;
    }

    pub fn record_completion(&mut self, executing: StationId, on_time: bool, queue_wait: f64, e2e: f64) {
        let a = self.at(executing);
        a.executed += 1;
        if on_time {
            a.on_time += 1;
        } else {
            a.late += 1;
        }
        a.wait_sum += queue_wait;
        a.e2e_sum += e2e;
    }

    pub fn finish(self) -> MetricsReport {
        let mut total = Accumulator::default();
        for a in self.stations.values() {
            total.received += a.received;
            total.executed += a.executed;
            total.on_time += a.on_time;
            total.late += a.late;
            total.dropped += a.dropped;
            total.wait_sum += a.wait_sum;
            total.e2e_sum += a.e2e_sum;
        }
        MetricsReport {
            policy_name: self.policy,
            seed: self.seed,
            config_digest: self.digest,
            vehicles: self.vehicles,
            urgent_fraction: self.urgent_fraction,
            transfers: self.transfers,
            per_station: self.stations.iter().map(|(&s, a)| (s, a.counters())).collect(),
            system: total.counters(),
        }
    }
}

/// Summary of repeated seeded runs of one setup and policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialAggregate {
    pub runs: Vec<MetricsReport>,
    pub mean_miss_rate: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std_miss_rate: f64,
    /// Per station mean over the runs in which the station's rate is defined.
    pub per_station_mean_miss_rate: BTreeMap<StationId, f64>,
    /// Mean over runs of the average rate across active stations.
    pub per_bs_mean_all: f64,
    /// Same, but averaging only stations that missed at least one deadline.
    pub per_bs_mean_missing_only: f64,
    pub mean_transfers: f64,
    pub mean_drops: f64,
}

/// Order-independent mean: values are sorted before summation.
fn mean(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_std(values: &mut [f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let mut sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    sq.sort_by(f64::total_cmp);
    (sq.iter().sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Average per-station rate of one run: (all active stations, only missing ones).
pub fn per_bs_means(report: &MetricsReport) -> (f64, f64) {
    let mut all: Vec<f64> = report.per_station.values().filter_map(station_rate).collect();
    let mut missing: Vec<f64> = all.iter().copied().filter(|r| *r > 0.0).collect();
    (mean(&mut all), mean(&mut missing))
}

pub fn aggregate(reports: Vec<MetricsReport>) -> Result<TrialAggregate, MetricsError> {
    let first = reports.first().ok_or(MetricsError::NoRuns)?;
    for r in &reports {
        if r.config_digest != first.config_digest {
            return Err(MetricsError::MixedRuns(first.config_digest.clone(), r.config_digest.clone()));
        }
        if r.policy_name != first.policy_name {
            return Err(MetricsError::MixedRuns(first.policy_name.clone(), r.policy_name.clone()));
        }
    }
    let mut rates = reports.iter().map(miss_rate).collect::<Result<Vec<_>, _>>()?;

    let mut by_station: BTreeMap<StationId, Vec<f64>> = BTreeMap::new();
    let (mut all, mut missing) = (Vec::new(), Vec::new());
    for r in &reports {
        for (&s, c) in &r.per_station {
            if let Some(rate) = station_rate(c) {
                by_station.entry(s).or_default().push(rate);
            }
        }
        let (a, m) = per_bs_means(r);
        all.push(a);
        missing.push(m);
    }
    let mut transfers: Vec<f64> = reports.iter().map(|r| r.transfers as f64).collect();
    let mut drops: Vec<f64> = reports.iter().map(|r| r.system.dropped as f64).collect();

    Ok(TrialAggregate {
        mean_miss_rate: mean(&mut rates),
        std_miss_rate: sample_std(&mut rates),
        per_station_mean_miss_rate: by_station
            .into_iter()
            .map(|(s, mut v)| (s, mean(&mut v)))
            .collect(),
        per_bs_mean_all: mean(&mut all),
        per_bs_mean_missing_only: mean(&mut missing),
        mean_transfers: mean(&mut transfers),
        mean_drops: mean(&mut drops),
        runs: reports,
    })
}

fn fraction_label(f: Option<f64>) -> String {
    f.map_or_else(|| "catalog".to_string(), |v| v.to_string())
}

pub const RUNS_HEADER: &str = "policy,seed,vehicles,urgent_fraction,miss_rate,drops,transfers";

pub const STATIONS_HEADER: &str = "policy,seed,vehicles,urgent_fraction,station,received,executed,\
completed_on_time,completed_late,dropped,miss_rate,mean_queue_wait,mean_e2e_delay";

pub const SWEEP_HEADER: &str = "sweep,vehicles,urgent_fraction,policy,trials,mean_miss_rate,\
std_miss_rate,per_bs_mean_all,per_bs_mean_missing_only,mean_transfers,mean_drops";

pub fn runs_row(r: &MetricsReport) -> String {
    let rate = miss_rate(r).map_or_else(|_| String::new(), |v| v.to_string());
    format!(
        "{},{},{},{},{},{},{}",
        r.policy_name,
        r.seed,
        r.vehicles,
        fraction_label(r.urgent_fraction),
        rate,
        r.system.dropped,
        r.transfers
    )
}

pub fn station_rows(r: &MetricsReport) -> Vec<String> {
    r.per_station
        .iter()
        .map(|(s, c)| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.policy_name,
                r.seed,
                r.vehicles,
                fraction_label(r.urgent_fraction),
                s,
                c.received,
                c.executed,
                c.completed_on_time,
                c.completed_late,
                c.dropped,
                station_rate(c).map_or_else(String::new, |v| v.to_string()),
                c.mean_queue_wait,
                c.mean_e2e_delay
            )
        })
        .collect()
}

pub fn sweep_row(sweep: &str, agg: &TrialAggregate) -> String {
    let first = &agg.runs[0];
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        sweep,
        first.vehicles,
        fraction_label(first.urgent_fraction),
        first.policy_name,
        agg.runs.len(),
        agg.mean_miss_rate,
        agg.std_miss_rate,
        agg.per_bs_mean_all,
        agg.per_bs_mean_missing_only,
        agg.mean_transfers,
        agg.mean_drops
    )
}
