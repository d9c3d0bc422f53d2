//! Seeded trials and experiment sweeps.
//!
//! Within one trial every policy replays the same generated workload, so
//! policy comparisons are paired. Completed sweep points are checkpointed
//! under `<out>/.sweep/` and reused when the same sweep is started again.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::heuristics::PolicyKind;
use crate::metrics::{
    aggregate, runs_row, station_rows, sweep_row, MetricsReport, TrialAggregate, RUNS_HEADER,
    STATIONS_HEADER, SWEEP_HEADER,
};
use crate::simcore::Simulation;
use crate::workload::{generate, TaskRequest};

/// Environment variable capping trial parallelism.
pub const THREADS_ENV: &str = "EDGEFED_THREADS";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one trial. The policy is deliberately not an input.
pub fn derive_seed(base_seed: u64, point: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ point) ^ trial)
}

/// Generates the workload for `seed` using the config's workload section.
pub fn workload_for(config: &SimConfig, seed: u64) -> Result<Vec<TaskRequest>> {
    generate(&config.workload, &config.task_types, &config.stations, seed)
}

/// Runs one policy over a prepared workload.
pub fn run_workload(
    config: &SimConfig,
    requests: &[TaskRequest],
    policy: PolicyKind,
    seed: u64,
) -> Result<MetricsReport> {
    Simulation::new(config, requests, policy, seed)?.run()
}

/// Generates the workload for `seed` and runs the configured policy on it.
pub fn run(config: &SimConfig, seed: u64) -> Result<MetricsReport> {
    config.validate()?;
    let requests = workload_for(config, seed)?;
    run_workload(config, &requests, config.policy, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepKind {
    /// 2,000 to 7,000 vehicles in steps of 1,000.
    Vehicles,
    /// Urgent share 0.1 to 0.9 in steps of 0.1 at the configured vehicle count.
    Urgency,
    /// The vehicle sweep, read per station.
    SingleBs,
}

impl SweepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepKind::Vehicles => "vehicles",
            SweepKind::Urgency => "urgency",
            SweepKind::SingleBs => "single-bs",
        }
    }

    pub fn points(&self, config: &SimConfig) -> Vec<SweepPoint> {
        match self {
            SweepKind::Vehicles | SweepKind::SingleBs => (2..=7u64)
                .enumerate()
                .map(|(i, k)| SweepPoint {
                    index: i as u64,
                    vehicles: k * 1000,
                    urgent_fraction: config.workload.urgent_fraction,
                })
                .collect(),
            SweepKind::Urgency => (1..=9u32)
                .enumerate()
                .map(|(i, k)| SweepPoint {
                    index: i as u64,
                    vehicles: config.workload.vehicle_count,
                    urgent_fraction: Some(f64::from(k) / 10.0),
                })
                .collect(),
        }
    }
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vehicles" => Ok(SweepKind::Vehicles),
            "urgency" => Ok(SweepKind::Urgency),
            "single-bs" | "single_bs" => Ok(SweepKind::SingleBs),
            other => Err(Error::invalid("sweep", format!("unknown sweep `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: u64,
    pub vehicles: u64,
    pub urgent_fraction: Option<f64>,
}

impl SweepPoint {
    pub fn apply(&self, base: &SimConfig) -> SimConfig {
        let mut cfg = base.clone();
        cfg.workload.vehicle_count = self.vehicles;
        cfg.workload.urgent_fraction = self.urgent_fraction;
        cfg
    }
}

/// Aggregates of every policy at one sweep point, in policy order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub point: SweepPoint,
    pub aggregates: Vec<TrialAggregate>,
}

impl PointResult {
    pub fn for_policy(&self, policy: PolicyKind) -> Option<&TrialAggregate> {
        self.aggregates
            .iter()
            .find(|a| a.runs.first().is_some_and(|r| r.policy_name == policy.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub points: Vec<PointResult>,
}

impl SweepResult {
    pub fn point(&self, vehicles: u64, urgent_fraction: Option<f64>) -> Option<&PointResult> {
        self.points
            .iter()
            .find(|p| p.point.vehicles == vehicles && p.point.urgent_fraction == urgent_fraction)
    }
}

/// Runs `trials` paired trials of every policy at one configuration.
///
/// Returns one report list per policy, each in trial order.
pub fn run_trials(
    config: &SimConfig,
    point: u64,
    policies: &[PolicyKind],
) -> Result<Vec<Vec<MetricsReport>>> {
    let per_trial: Vec<Vec<MetricsReport>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(config.base_seed, point, trial);
            let requests = workload_for(config, seed)?;
            policies
                .iter()
                .map(|&p| run_workload(config, &requests, p, seed))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..policies.len())
        .map(|pi| per_trial.iter().map(|reports| reports[pi].clone()).collect())
        .collect())
}

fn run_point(config: &SimConfig, point: &SweepPoint, policies: &[PolicyKind]) -> Result<PointResult> {
    let cfg = point.apply(config);
    let aggregates = run_trials(&cfg, point.index, policies)?
        .into_iter()
        .map(|runs| aggregate(runs).map_err(Error::from))
        .collect::<Result<Vec<_>>>()?;
    Ok(PointResult {
        point: *point,
        aggregates,
    })
}

/// Thread pool honoring [`THREADS_ENV`] when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(THREADS_ENV, format!("not a thread count: `{v}`")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::invalid(THREADS_ENV, e.to_string()))
}

struct Checkpoint {
    dir: PathBuf,
    fingerprint: String,
}

impl Checkpoint {
    fn open(out: &Path, fingerprint: String) -> Result<Self> {
        let dir = out.join(".sweep");
        fs::create_dir_all(&dir)?;
        let cp = Self { dir, fingerprint };
        let index = cp.index_path();
        let stale = match fs::read_to_string(&index) {
            Ok(text) => text.lines().next() != Some(cp.fingerprint.as_str()),
            Err(_) => true,
        };
        if stale {
            for entry in fs::read_dir(&cp.dir)? {
                fs::remove_file(entry?.path())?;
            }
            fs::write(&index, format!("{}\n", cp.fingerprint))?;
        }
        Ok(cp)
    }

    fn index_path(&self) -> PathBuf {
        self.dir.join("index")
    }

    fn point_path(&self, index: u64) -> PathBuf {
        self.dir.join(format!("point-{index}.json"))
    }

    fn completed(&self) -> Result<Vec<u64>> {
        let text = fs::read_to_string(self.index_path())?;
        Ok(text.lines().skip(1).filter_map(|l| l.trim().parse().ok()).collect())
    }

    fn load(&self, index: u64) -> Result<Option<PointResult>> {
        match fs::read_to_string(self.point_path(index)) {
            Ok(text) => Ok(serde_json::from_str(&text).ok()),
            Err(_) => Ok(None),
        }
    }

    fn store(&self, result: &PointResult) -> Result<()> {
        let json = serde_json::to_string(result).expect("point result serializes");
        fs::write(self.point_path(result.point.index), json)?;
        let mut f = fs::OpenOptions::new().append(true).open(self.index_path())?;
        writeln!(f, "{}", result.point.index)?;
        Ok(())
    }
}

/// Runs a sweep. With `out`, completed points are checkpointed there and
/// `runs.csv`, `stations.csv` and `sweep.csv` are written at the end.
pub fn run_sweep(
    config: &SimConfig,
    kind: SweepKind,
    policies: &[PolicyKind],
    out: Option<&Path>,
) -> Result<SweepResult> {
    config.validate()?;
    let points = kind.points(config);
    let checkpoint = match out {
        Some(dir) => {
            let names: Vec<_> = policies.iter().map(|p| p.as_str()).collect();
            let fingerprint = format!(
                "{} {} seed={} trials={} policies={}",
                kind.as_str(),
                config.digest(),
                config.base_seed,
                config.trials,
                names.join("+")
            );
            Some(Checkpoint::open(dir, fingerprint)?)
        }
        None => None,
    };

    let done = match &checkpoint {
        Some(cp) => cp.completed()?,
        None => Vec::new(),
    };
    let mut results = Vec::with_capacity(points.len());
    for point in &points {
        let cached = match &checkpoint {
            Some(cp) if done.contains(&point.index) => cp.load(point.index)?,
            _ => None,
        };
        let result = match cached {
            Some(r) => r,
            None => {
                let r = run_point(config, point, policies)?;
                if let Some(cp) = &checkpoint {
                    cp.store(&r)?;
                }
                r
            }
        };
        results.push(result);
    }

    let result = SweepResult {
        kind,
        points: results,
    };
    if let Some(dir) = out {
        write_csvs(&result, dir)?;
    }
    Ok(result)
}

fn write_lines(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the run-level and station-level CSVs for a list of reports.
pub fn write_run_csvs(reports: &[MetricsReport], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_lines(&dir.join("runs.csv"), RUNS_HEADER, reports.iter().map(runs_row))?;
    write_lines(
        &dir.join("stations.csv"),
        STATIONS_HEADER,
        reports.iter().flat_map(station_rows),
    )
}

pub fn write_csvs(result: &SweepResult, dir: &Path) -> Result<()> {
    let runs: Vec<MetricsReport> = result
        .points
        .iter()
        .flat_map(|p| p.aggregates.iter().flat_map(|a| a.runs.iter().cloned()))
        .collect();
    write_run_csvs(&runs, dir)?;
    write_lines(
        &dir.join("sweep.csv"),
        SWEEP_HEADER,
        result
            .points
            .iter()
            .flat_map(|p| p.aggregates.iter().map(|a| sweep_row(result.kind.as_str(), a))),
    )
}
