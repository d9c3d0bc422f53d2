//! Load Balancer allocation policies.
//!
//! Each policy sees the arriving task, the receiving station, its federation
//! neighbors and read-only views of the ETC matrix and the receiving station's
//! ETT matrix, and returns where the task should execute.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::StationId;
use crate::simcore::Task;
use crate::stochastic::{prob_meet_deadline, NormalDist, ProfileMatrix};

pub const DEFAULT_DROP_THRESHOLD: f64 = 1e-9;
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

/// Everything a Load Balancer knows when a task lands at its station.
#[derive(Debug, Clone, Copy)]
pub struct AllocationContext<'a> {
    pub task: &'a Task,
    pub receiving_station: StationId,
    pub neighbor_ids: &'a [StationId],
    pub etc: &'a ProfileMatrix,
    /// ETT matrix owned by the receiving station, keyed by neighbor.
    pub ett: &'a ProfileMatrix,
    pub now: f64,
}

impl AllocationContext<'_> {
    pub fn time_remaining(&self) -> f64 {
        self.task.deadline - self.now
    }

    /// Receiving station first, then neighbors in their listed order.
    pub fn candidates(&self) -> impl Iterator<Item = StationId> + '_ {
        std::iter::once(self.receiving_station).chain(self.neighbor_ids.iter().copied())
    }

    fn etc(&self, station: StationId) -> Result<NormalDist> {
        self.etc.get(self.task.type_id, station)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Assign(StationId),
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub station: StationId,
    /// Policy-specific score: probability, expected completion time or certainty.
    pub score: f64,
    /// Spread of the distribution behind the score.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationDecision {
    pub outcome: Outcome,
    /// Deadline probability at the chosen destination; 1.0 for policies
    /// that do not estimate one.
    pub probability: f64,
    pub candidate_log: Vec<CandidateScore>,
}

impl AllocationDecision {
    pub fn target(&self) -> Option<StationId> {
        match self.outcome {
            Outcome::Assign(s) => Some(s),
            Outcome::Drop => None,
        }
    }
}

/// A Load Balancer decision rule.
pub trait AllocationPolicy: Send + Sync {
    fn name(&self) -> &'static str;

    fn decide(&self, ctx: &AllocationContext<'_>) -> Result<AllocationDecision>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "bp")]
    BestProbability,
    #[serde(rename = "mect")]
    MinExpectedCompletion,
    #[serde(rename = "mc")]
    MaxCertainty,
    #[serde(rename = "nr")]
    NoRedirection,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::BestProbability,
        PolicyKind::MinExpectedCompletion,
        PolicyKind::MaxCertainty,
        PolicyKind::NoRedirection,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::BestProbability => "bp",
            PolicyKind::MinExpectedCompletion => "mect",
            PolicyKind::MaxCertainty => "mc",
            PolicyKind::NoRedirection => "nr",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bp" => Ok(PolicyKind::BestProbability),
            "mect" => Ok(PolicyKind::MinExpectedCompletion),
            "mc" => Ok(PolicyKind::MaxCertainty),
            "nr" => Ok(PolicyKind::NoRedirection),
            _ => Err(Error::UnknownPolicy(s.to_string())),
        }
    }
}

/// Tunables shared by the probability-based policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams {
    pub drop_threshold: f64,
    pub tie_tolerance: f64,
    pub first_improvement: bool,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            drop_threshold: DEFAULT_DROP_THRESHOLD,
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
            first_improvement: false,
        }
    }
}

pub fn build_policy(kind: PolicyKind, params: PolicyParams) -> Box<dyn AllocationPolicy> {
    match kind {
        PolicyKind::BestProbability => Box::new(BestProbability { params }),
        PolicyKind::MinExpectedCompletion => Box::new(MinExpectedCompletion),
        PolicyKind::MaxCertainty => Box::new(MaxCertainty),
        PolicyKind::NoRedirection => Box::new(NoRedirection),
    }
}

/// Picks the candidate with the highest probability of meeting the deadline.
///
/// Neighbors are scored on the convolution of their completion profile with
/// the transfer profile. Probabilities within `tie_tolerance` of the best are
/// tied; ties go to the smaller sigma, then to the receiving station, then to
/// the lower station id. When even the winner is below `drop_threshold` the
/// task is dropped.
#[derive(Debug, Clone, Copy, Default)]
pub struct BestProbability {
    pub params: PolicyParams,
}

impl BestProbability {
    fn score_all(&self, ctx: &AllocationContext<'_>) -> Result<Vec<CandidateScore>> {
        let remaining = ctx.time_remaining();
        let mut log = Vec::with_capacity(ctx.neighbor_ids.len() + 1);
        let local = ctx.etc(ctx.receiving_station)?;
        log.push(score(ctx.receiving_station, local, remaining));
        for &j in ctx.neighbor_ids {
            let transfer = ctx.ett.get(ctx.task.type_id, j)?;
            let dist = ctx.etc(j)?.convolve(&transfer);
            log.push(score(j, dist, remaining));
        }
        Ok(log)
    }

    fn pick_global(&self, ctx: &AllocationContext<'_>, log: &[CandidateScore]) -> CandidateScore {
        let tol = self.params.tie_tolerance;
        let best_p = log.iter().map(|c| c.score).fold(f64::NEG_INFINITY, f64::max);
        *log.iter()
            .filter(|c| best_p - c.score <= tol)
            .min_by(|a, b| {
                a.sigma
                    .total_cmp(&b.sigma)
                    .then_with(|| receiving_first(ctx, a.station, b.station))
            })
            .expect("at least the receiving station is scored")
    }

    /// Literal scan: keep the receiving station unless some neighbor, in
    /// listed order, beats it (or ties it with a smaller sigma).
    fn pick_first_improvement(&self, log: &[CandidateScore]) -> CandidateScore {
        let tol = self.params.tie_tolerance;
        let local = log[0];
        for &c in &log[1..] {
            if c.score > local.score + tol {
                return c;
            }
            if (c.score - local.score).abs() <= tol && c.sigma < local.sigma {
                return c;
            }
        }
        local
    }
}

fn score(station: StationId, dist: NormalDist, remaining: f64) -> CandidateScore {
    CandidateScore {
        station,
        score: prob_meet_deadline(dist, remaining).value,
        sigma: dist.sigma,
    }
}

/// Orders the receiving station ahead of everything else, then by id.
fn receiving_first(
    ctx: &AllocationContext<'_>,
    a: StationId,
    b: StationId,
) -> std::cmp::Ordering {
    let r = ctx.receiving_station;
    (a != r).cmp(&(b != r)).then(a.cmp(&b))
}

impl AllocationPolicy for BestProbability {
    fn name(&self) -> &'static str {
        "bp"
    }

    fn decide(&self, ctx: &AllocationContext<'_>) -> Result<AllocationDecision> {
        let log = self.score_all(ctx)?;
        let chosen = if self.params.first_improvement {
            self.pick_first_improvement(&log)
        } else {
            self.pick_global(ctx, &log)
        };
        let (outcome, probability) = if chosen.score < self.params.drop_threshold {
            (Outcome::Drop, 0.0)
        } else {
            (Outcome::Assign(chosen.station), chosen.score)
        };
        Ok(AllocationDecision {
            outcome,
            probability,
            candidate_log: log,
        })
    }
}

/// Minimum expected completion time: argmin of the ETC mean.
///
/// Transfer time is not part of the score.
#[derive(Debug, Clone, Copy, Default)]
pub struct MinExpectedCompletion;

impl AllocationPolicy for MinExpectedCompletion {
    fn name(&self) -> &'static str {
        "mect"
    }

    fn decide(&self, ctx: &AllocationContext<'_>) -> Result<AllocationDecision> {
        let log = ctx
            .candidates()
            .map(|s| {
                let d = ctx.etc(s)?;
                Ok(CandidateScore {
                    station: s,
                    score: d.mu,
                    sigma: d.sigma,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let chosen = log
            .iter()
            .min_by(|a, b| {
                a.score
                    .total_cmp(&b.score)
                    .then_with(|| receiving_first(ctx, a.station, b.station))
            })
            .expect("non-empty candidate set");
        Ok(assign(chosen.station, log))
    }
}

/// Maximum certainty: argmax of remaining time minus the ETC mean.
/// Never drops, even when every certainty is negative.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxCertainty;

impl AllocationPolicy for MaxCertainty {
    fn name(&self) -> &'static str {
        "mc"
    }

    fn decide(&self, ctx: &AllocationContext<'_>) -> Result<AllocationDecision> {
        let remaining = ctx.time_remaining();
        let log = ctx
            .candidates()
            .map(|s| {
                let d = ctx.etc(s)?;
                Ok(CandidateScore {
                    station: s,
                    score: remaining - d.mu,
                    sigma: d.sigma,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let chosen = log
            .iter()
            .max_by(|a, b| {
                a.score
                    .total_cmp(&b.score)
                    .then_with(|| receiving_first(ctx, b.station, a.station))
            })
            .expect("non-empty candidate set");
        Ok(assign(chosen.station, log))
    }
}

/// Always executes at the receiving station.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoRedirection;

impl AllocationPolicy for NoRedirection {
    fn name(&self) -> &'static str {
        "nr"
    }

    fn decide(&self, ctx: &AllocationContext<'_>) -> Result<AllocationDecision> {
        Ok(assign(ctx.receiving_station, Vec::new()))
    }
}

fn assign(station: StationId, candidate_log: Vec<CandidateScore>) -> AllocationDecision {
    AllocationDecision {
        outcome: Outcome::Assign(station),
        probability: 1.0,
        candidate_log,
    }
}
