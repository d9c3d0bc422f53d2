use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Parser;
use edgefed::heuristics::PolicyKind;
use edgefed::metrics::{aggregate, MetricsReport};
use edgefed::simcore::Simulation;
use edgefed::sweep::{derive_seed, run_sweep, thread_pool, workload_for, write_run_csvs, SweepKind};
use edgefed::workload::{read_trace, write_trace, TaskRequest};
use edgefed::{load_config, SimConfig};

/// Federated edge base station simulator.
///
/// Without `--sweep`, runs the configured policy for `trials` seeds and
/// writes `runs.csv` and `stations.csv`. With `--sweep`, runs all four
/// policies over the chosen sweep and also writes `sweep.csv`.
#[derive(Debug, Parser)]
#[command(name = "edgefed", version)]
struct Args {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Policy for single runs: bp, mect, mc or nr.
    #[arg(long)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    vehicles: Option<u64>,
    /// Base seed from which trial seeds are derived.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    sweep: Option<SweepKind>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Workload trace: replayed when the file exists, otherwise written.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Writes the event log of the first trial.
    #[arg(long)]
    dump_events: Option<PathBuf>,
}

fn build_config(args: &Args) -> Result<SimConfig> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => SimConfig::default(),
    };
    if let Some(p) = args.policy {
        cfg.policy = p;
    }
    if let Some(v) = args.vehicles {
        cfg.workload.vehicle_count = v;
    }
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_or_export_trace(path: &Path, cfg: &SimConfig, seed: u64) -> Result<Vec<TaskRequest>> {
    if path.exists() {
        let file = fs::File::open(path).with_context(|| format!("opening trace {}", path.display()))?;
        return Ok(read_trace(&mut BufReader::new(file), &cfg.stations)?);
    }
    let requests = workload_for(cfg, seed)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_trace(&requests, &mut w)?;
    w.flush()?;
    Ok(requests)
}

fn single_runs(args: &Args, cfg: &SimConfig) -> Result<Vec<MetricsReport>> {
    let mut reports = Vec::with_capacity(cfg.trials);
    let mut replay = None;
    for trial in 0..cfg.trials as u64 {
        let seed = derive_seed(cfg.base_seed, 0, trial);
        let requests = match (&args.trace, &replay) {
            (Some(_), Some(r)) => Vec::clone(r),
            (Some(path), None) => {
                let r = load_or_export_trace(path, cfg, seed)?;
                replay = Some(r.clone());
                r
            }
            (None, _) => workload_for(cfg, seed)?,
        };
        let sim = Simulation::new(cfg, &requests, cfg.policy, seed)?;
        let report = match (&args.dump_events, trial) {
            (Some(path), 0) => {
                let mut w = BufWriter::new(fs::File::create(path)?);
                let r = sim.run_traced(&mut w)?;
                w.flush()?;
                r
            }
            _ => sim.run()?,
        };
        reports.push(report);
    }
    Ok(reports)
}

fn main() -> Result<()> {
    let args = Args::parse();
    let cfg = build_config(&args)?;
    let pool = thread_pool()?;

    if let Some(kind) = args.sweep {
        let result = pool.install(|| run_sweep(&cfg, kind, &PolicyKind::ALL, Some(&args.out)))?;
        for p in &result.points {
            let uf = p
                .point
                .urgent_fraction
                .map_or_else(|| "catalog".to_owned(), |f| format!("{f:.1}"));
            let cells: Vec<String> = p
                .aggregates
                .iter()
                .map(|a| format!("{}={:.4}", a.runs[0].policy_name, a.mean_miss_rate))
                .collect();
            println!("vehicles={} urgent={} {}", p.point.vehicles, uf, cells.join(" "));
        }
        println!("wrote {}", args.out.display());
        return Ok(());
    }

    let reports = pool.install(|| single_runs(&args, &cfg))?;
    write_run_csvs(&reports, &args.out)?;
    let agg = aggregate(reports)?;
    println!(
        "policy={} trials={} mean_miss_rate={:.4} std={:.4} transfers={:.1} drops={:.1}",
        cfg.policy, agg.runs.len(), agg.mean_miss_rate, agg.std_miss_rate, agg.mean_transfers, agg.mean_drops
    );
    println!("wrote {}", args.out.display());
    Ok(())
}
