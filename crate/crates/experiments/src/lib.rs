//! Experiment reproduction checks over sweep results.
//!
//! Aggregates are expected in [`POLICIES`] order.

use edgefed::sweep::{run_sweep, SweepKind, SweepResult};
use edgefed::{PolicyKind, Result, SimConfig};

pub const POLICIES: [PolicyKind; 4] = [
    PolicyKind::BestProbability,
    PolicyKind::MinExpectedCompletion,
    PolicyKind::MaxCertainty,
    PolicyKind::NoRedirection,
];

const BP: usize = 0;
const MECT: usize = 1;
const MC: usize = 2;
const NR: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

pub fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Runs the vehicle and urgency sweeps for every policy.
pub fn run_experiments(config: &SimConfig) -> Result<(SweepResult, SweepResult)> {
    let vehicles = run_sweep(config, SweepKind::Vehicles, &POLICIES, None)?;
    let urgency = run_sweep(config, SweepKind::Urgency, &POLICIES, None)?;
    Ok((vehicles, urgency))
}

/// One line per sweep point with every policy's mean miss rate.
pub fn fmt_points(res: &SweepResult) -> String {
    let mut s = String::new();
    for p in &res.points {
        let label = match p.point.urgent_fraction {
            Some(f) if res.kind == SweepKind::Urgency => format!("uf={f:.1}"),
            _ => format!("{}k", p.point.vehicles / 1000),
        };
        let m: Vec<String> = p.aggregates.iter().map(|a| format!("{:.3}", a.mean_miss_rate)).collect();
        s += &format!("\n      {label:>6}  bp/mect/mc/nr = {}", m.join(" / "));
    }
    s
}

/// Policy ordering over 3,000 to 6,000 vehicles and the BP margin over NR.
pub fn ordering(v: &SweepResult) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for p in &v.points {
        let m: Vec<f64> = p.aggregates.iter().map(|a| a.mean_miss_rate).collect();
        let k = p.point.vehicles;
        if (3000..=6000).contains(&k) && !(m[BP] <= m[MC] && m[MC] <= m[MECT] && m[MECT] <= m[NR]) {
            ok = false;
            notes.push(format!("order broken at {k}"));
        }
        if (4000..=5000).contains(&k) && m[NR] - m[BP] < 0.03 {
            ok = false;
            notes.push(format!("nr-bp = {:+.3} at {k}", m[NR] - m[BP]));
        }
    }
    verdict(ok, format!("{}{}", notes.join(", "), fmt_points(v)))
}

/// Miss rate grows with vehicles; one inversion within a std is tolerated.
pub fn monotone(v: &SweepResult) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, name) in ["bp", "mect", "mc", "nr"].iter().enumerate() {
        let mut inversions = 0;
        let mut within = true;
        for w in v.points.windows(2) {
            let (a, b) = (&w[0].aggregates[i], &w[1].aggregates[i]);
            if b.mean_miss_rate < a.mean_miss_rate {
                inversions += 1;
                within &= a.mean_miss_rate - b.mean_miss_rate <= a.std_miss_rate.max(b.std_miss_rate);
            }
        }
        if inversions > 1 || !within {
            ok = false;
        }
        notes.push(format!("{name}: {inversions} inversion(s)"));
    }
    verdict(ok, notes.join(", "))
}

/// Urgent share 0.9 misses more than 0.1, and BP leads NR somewhere in 0.7 to 0.9.
pub fn urgency(u: &SweepResult) -> Verdict {
    let first = &u.points[0];
    let last = &u.points[u.points.len() - 1];
    let mut notes = Vec::new();
    let mut rises = true;
    for (i, name) in ["bp", "mect", "mc", "nr"].iter().enumerate() {
        let (lo, hi) = (first.aggregates[i].mean_miss_rate, last.aggregates[i].mean_miss_rate);
        if hi <= lo {
            rises = false;
            notes.push(format!("{name} {lo:.3} -> {hi:.3}"));
        }
    }
    let best_gap = u.points[6..]
        .iter()
        .map(|p| p.aggregates[NR].mean_miss_rate - p.aggregates[BP].mean_miss_rate)
        .fold(f64::NEG_INFINITY, f64::max);
    let gap_ok = best_gap >= 0.05;
    notes.push(format!("best nr-bp in 0.7..0.9 = {best_gap:+.3}"));
    verdict(rises && gap_ok, format!("{}{}", notes.join(", "), fmt_points(u)))
}

/// BP's average station miss rate is at least 20% below NR's at 2,000 and
/// 3,000 vehicles, averaging stations that missed at least once.
pub fn single_bs(v: &SweepResult) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for p in v.points.iter().filter(|p| (2000..=3000).contains(&p.point.vehicles)) {
        let (bp, nr) = (&p.aggregates[BP], &p.aggregates[NR]);
        ok &= bp.per_bs_mean_missing_only <= 0.8 * nr.per_bs_mean_missing_only;
        notes.push(format!(
            "{}k missing-only bp {:.3} vs nr {:.3} (all stations: {:.3} vs {:.3})",
            p.point.vehicles / 1000,
            bp.per_bs_mean_missing_only,
            nr.per_bs_mean_missing_only,
            bp.per_bs_mean_all,
            nr.per_bs_mean_all
        ));
    }
    verdict(ok, notes.join("; "))
}

/// NR never transfers or drops.
pub fn nr_invariant(sweeps: &[&SweepResult]) -> Verdict {
    let mut runs = 0;
    let mut violations = 0;
    for s in sweeps {
        for p in &s.points {
            for r in &p.aggregates[NR].runs {
                runs += 1;
                if r.transfers != 0 || r.system.dropped != 0 {
                    violations += 1;
                }
            }
        }
    }
    verdict(violations == 0, format!("{violations} of {runs} NR runs transferred or dropped"))
}
