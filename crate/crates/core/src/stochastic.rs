//! Probability machinery for delay estimation.
//!
//! Every delay in the system is modelled as a Normal distribution. Completion
//! time profiles (ETC) and inter-station transfer profiles (ETT) are kept in
//! [`ProfileMatrix`] instances, which learn from observed durations and only
//! publish new estimates when [`ProfileMatrix::refresh`] is called.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{StationId, TaskTypeId};

/// Gaussian delay model in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalDist {
    pub mu: f64,
    pub sigma: f64,
}

impl NormalDist {
    /// Panics if `sigma` is negative or either parameter is not finite.
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self::try_new(mu, sigma).expect("invalid normal distribution parameters")
    }

    pub fn try_new(mu: f64, sigma: f64) -> Option<Self> {
        (mu.is_finite() && sigma.is_finite() && sigma >= 0.0).then_some(Self { mu, sigma })
    }

    /// A point mass at `value`.
    pub fn degenerate(value: f64) -> Self {
        Self::new(value, 0.0)
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Distribution of the sum of two independent delays.
    pub fn convolve(&self, other: &NormalDist) -> NormalDist {
        convolve(*self, *other)
    }
}

/// Sum of two independent Normal delays: means add, variances add.
pub fn convolve(a: NormalDist, b: NormalDist) -> NormalDist {
    NormalDist {
        mu: a.mu + b.mu,
        sigma: a.sigma.hypot(b.sigma),
    }
}

/// Standard normal CDF.
///
/// Hart's double precision rational approximation as arranged by West
/// (Wilmott Magazine, 2005). Absolute error is well below 1e-14 over the
/// whole real line.
pub fn standard_normal_cdf(z: f64) -> f64 {
    let x = z.abs();
    let tail = if x > 37.0 {
        0.0
    } else {
        let e = (-0.5 * x * x).exp();
        if x < 7.071_067_811_865_47 {
            let mut num = 3.526_249_659_989_11e-2 * x + 0.700_383_064_443_688;
            num = num * x + 6.373_962_203_531_65;
            num = num * x + 33.912_866_078_383;
            num = num * x + 112.079_291_497_871;
            num = num * x + 221.213_596_169_931;
            num = num * x + 220.206_867_912_376;
            let mut den = 8.838_834_764_831_84e-2 * x + 1.755_667_163_182_64;
            den = den * x + 16.064_177_579_207;
            den = den * x + 86.780_732_202_946_1;
            den = den * x + 296.564_248_779_674;
            den = den * x + 637.333_633_378_831;
            den = den * x + 793.826_512_519_948;
            den = den * x + 440.413_735_824_752;
            e * num / den
        } else {
            let mut b = x + 0.65;
            b = x + 4.0 / b;
            b = x + 3.0 / b;
            b = x + 2.0 / b;
            b = x + 1.0 / b;
            e / b / 2.506_628_274_631
        }
    };
    if z > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Probability that a delay drawn from `source_dist` finishes before the
/// deadline, together with the distribution that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeadlineProbability {
    pub value: f64,
    pub source_dist: NormalDist,
}

/// P(X < time_remaining) for X ~ `dist`.
///
/// A degenerate distribution is a step: 1 strictly after the mean, 0 otherwise.
pub fn prob_meet_deadline(dist: NormalDist, time_remaining: f64) -> DeadlineProbability {
    let value = if dist.sigma > 0.0 {
        standard_normal_cdf((time_remaining - dist.mu) / dist.sigma)
    } else if time_remaining > dist.mu {
        1.0
    } else {
        0.0
    };
    DeadlineProbability {
        value: value.clamp(0.0, 1.0),
        source_dist: dist,
    }
}

/// Sample mean and sample (n - 1) standard deviation, two-pass.
///
/// Returns `None` for fewer than two samples.
pub fn sample_statistics(samples: &[f64]) -> Option<NormalDist> {
    if samples.len() < 2 {
        return None;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let ss: f64 = samples.iter().map(|s| (s - mean) * (s - mean)).sum();
    NormalDist::try_new(mean, (ss / (n - 1.0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProfileKind {
    /// Estimated task completion time.
    Etc,
    /// Estimated task transfer time.
    Ett,
}

#[derive(Debug, Clone, PartialEq)]
struct ProfileEntry {
    published: NormalDist,
    samples: Vec<f64>,
}

/// Per (task type, station) delay profiles with buffered online samples.
///
/// Recorded samples are invisible to readers until the next [`refresh`].
///
/// [`refresh`]: ProfileMatrix::refresh
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMatrix {
    kind: ProfileKind,
    entries: BTreeMap<(TaskTypeId, StationId), ProfileEntry>,
    window: Option<usize>,
}

/// Flat, serializable view of one matrix cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCell {
    pub task_type: TaskTypeId,
    pub station: StationId,
    pub mu: f64,
    pub sigma: f64,
    pub samples: usize,
}

impl ProfileMatrix {
    /// Builds a matrix where every known pair starts at its bootstrap prior.
    pub fn with_priors<I>(kind: ProfileKind, priors: I) -> Self
    where
        I: IntoIterator<Item = ((TaskTypeId, StationId), NormalDist)>,
    {
        let entries = priors
            .into_iter()
            .map(|(key, prior)| {
                (
                    key,
                    ProfileEntry {
                        published: prior,
                        samples: Vec::new(),
                    },
                )
            })
            .collect();
        Self {
            kind,
            entries,
            window: None,
        }
    }

    /// Limits refresh to the most recent `window` samples of each pair.
    /// Buffers still hold the full history.
    pub fn with_window(mut self, window: Option<usize>) -> Self {
        self.window = window;
        self
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, task_type: TaskTypeId, station: StationId) -> bool {
        self.entries.contains_key(&(task_type, station))
    }

    /// Currently published distribution for a pair.
    pub fn get(&self, task_type: TaskTypeId, station: StationId) -> Result<NormalDist> {
        self.entries
            .get(&(task_type, station))
            .map(|e| e.published)
            .ok_or(Error::UnknownPair { task_type, station })
    }

    /// Observed history for a pair, oldest first.
    pub fn samples(&self, task_type: TaskTypeId, station: StationId) -> Result<&[f64]> {
        self.entries
            .get(&(task_type, station))
            .map(|e| e.samples.as_slice())
            .ok_or(Error::UnknownPair { task_type, station })
    }

    pub fn record_sample(
        &mut self,
        task_type: TaskTypeId,
        station: StationId,
        duration: f64,
    ) -> Result<()> {
        debug_assert!(duration >= 0.0, "negative duration sample {duration}");
        let entry = self
            .entries
            .get_mut(&(task_type, station))
            .ok_or(Error::UnknownPair { task_type, station })?;
        entry.samples.push(duration);
        Ok(())
    }

    /// Republishes every pair holding at least two samples from its buffer.
    pub fn refresh(&mut self) {
        let window = self.window;
        for entry in self.entries.values_mut() {
            let history = match window {
                Some(w) if entry.samples.len() > w => &entry.samples[entry.samples.len() - w..],
                _ => &entry.samples[..],
            };
            if let Some(dist) = sample_statistics(history) {
                entry.published = dist;
            }
        }
    }

    pub fn cells(&self) -> Vec<ProfileCell> {
        self.entries
            .iter()
            .map(|(&(task_type, station), e)| ProfileCell {
                task_type,
                station,
                mu: e.published.mu,
                sigma: e.published.sigma,
                samples: e.samples.len(),
            })
            .collect()
    }
}
