#![allow(dead_code)]

use edgefed::config::StationSpec;
use edgefed::heuristics::{AllocationContext, Outcome};
use edgefed::simcore::{NetworkModel, Position};
use edgefed::stochastic::ProfileKind;
use edgefed::workload::{TaskRequest, TaskTypeSpec};
use edgefed::{NormalDist, ProfileMatrix, SimConfig, StationId, Task, TaskId, TaskStatus, TaskTypeId};
use rand::Rng;

pub mod micro;

/// Adaptive Gauss-Kronrod (7, 15) quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    const XGK: [f64; 8] = [
        0.991_455_371_120_812_6,
        0.949_107_912_342_758_5,
        0.864_864_423_359_769_1,
        0.741_531_185_599_394_4,
        0.586_087_235_467_691_1,
        0.405_845_151_377_397_2,
        0.207_784_955_007_898_5,
        0.0,
    ];
    const WGK: [f64; 8] = [
        0.022_935_322_010_529_22,
        0.063_092_092_629_978_55,
        0.104_790_010_322_250_2,
        0.140_653_259_715_525_9,
        0.169_004_726_639_267_9,
        0.190_350_578_064_785_4,
        0.204_432_940_075_298_9,
        0.209_482_141_084_728_8,
    ];
    const WG: [f64; 4] = [
        0.129_484_966_168_869_7,
        0.279_705_391_489_276_7,
        0.381_830_050_505_118_9,
        0.417_959_183_673_469_4,
    ];
    fn rule(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut k = WGK[7] * fc;
        let mut g = WG[3] * fc;
        for j in 0..7 {
            let (f1, f2) = (f(c - h * XGK[j]), f(c + h * XGK[j]));
            k += WGK[j] * (f1 + f2);
            if j % 2 == 1 {
                g += WG[j / 2] * (f1 + f2);
            }
        }
        (k * h, ((k - g) * h).abs())
    }
    fn go(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (k, err) = rule(f, a, b);
        if err <= tol || depth == 0 {
            return k;
        }
        let m = 0.5 * (a + b);
        go(f, a, m, 0.5 * tol, depth - 1) + go(f, m, b, 0.5 * tol, depth - 1)
    }
    go(f, a, b, tol, 40)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF by direct quadrature of the density.
pub fn quad_cdf(z: f64) -> f64 {
    if z >= 0.0 {
        0.5 + integrate(&normal_pdf, 0.0, z.min(40.0), 1e-14)
    } else {
        (0.5 - integrate(&normal_pdf, z.max(-40.0), 0.0, 1e-14)).max(0.0)
    }
}

pub fn task(type_id: u32, now: f64, remaining: f64) -> Task {
    Task {
        id: TaskId(0),
        type_id: TaskTypeId(type_id),
        length: 1000.0,
        data_size_up: 1.0,
        data_size_down: 1.0,
        urgent: false,
        origin_position: Position::new(0.0, 0.0),
        arrival_time: now,
        deadline: now + remaining,
        receiving_station: StationId(0),
        executing_station: None,
        status: TaskStatus::Pending,
        transfer_start: None,
        enqueue_time: None,
        start_time: None,
        completion_time: None,
    }
}

/// Owned inputs of one allocation decision.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub task: Task,
    pub receiving: StationId,
    pub neighbors: Vec<StationId>,
    pub etc: Vec<(StationId, NormalDist)>,
    pub ett: Vec<(StationId, NormalDist)>,
    pub now: f64,
    etc_m: ProfileMatrix,
    ett_m: ProfileMatrix,
}

impl Scenario {
    pub fn new(
        now: f64,
        remaining: f64,
        receiving: StationId,
        etc: Vec<(StationId, NormalDist)>,
        ett: Vec<(StationId, NormalDist)>,
    ) -> Self {
        let ty = TaskTypeId(0);
        let mut task = task(0, now, remaining);
        task.receiving_station = receiving;
        let neighbors = ett.iter().map(|(s, _)| *s).collect();
        let etc_m = ProfileMatrix::with_priors(ProfileKind::Etc, etc.iter().map(|(s, d)| ((ty, *s), *d)));
        let ett_m = ProfileMatrix::with_priors(ProfileKind::Ett, ett.iter().map(|(s, d)| ((ty, *s), *d)));
        Self { task, receiving, neighbors, etc, ett, now, etc_m, ett_m }
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        let n_neighbors = rng.random_range(0..=6);
        let mut ids: Vec<u32> = (0..20).collect();
        for i in 0..ids.len() {
            let j = rng.random_range(i..ids.len());
            ids.swap(i, j);
        }
        let receiving = StationId(ids[0]);
        let dist = |rng: &mut dyn rand::RngCore, mu_hi: f64, sd_hi: f64| {
            let sigma = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..sd_hi) };
            NormalDist::new(rng.random_range(0.05..mu_hi), sigma)
        };
        let mut etc = vec![(receiving, dist(rng, 20.0, 6.0))];
        let mut ett = Vec::new();
        for &id in &ids[1..=n_neighbors] {
            etc.push((StationId(id), dist(rng, 20.0, 6.0)));
            ett.push((StationId(id), dist(rng, 5.0, 1.0)));
        }
        // Plant exact ties now and then.
        if n_neighbors >= 2 && rng.random_bool(0.2) {
            etc[2].1 = etc[1].1;
            ett[1].1 = ett[0].1;
        }
        if n_neighbors >= 1 && rng.random_bool(0.1) {
            etc[1].1 = NormalDist::new(0.0, 0.0);
            ett[0].1 = NormalDist::new(etc[0].1.mu, etc[0].1.sigma);
        }
        let now = rng.random_range(0.0..1000.0);
        let remaining = if rng.random_bool(0.1) {
            rng.random_range(100.0..200.0)
        } else {
            rng.random_range(-2.0..30.0)
        };
        Self::new(now, remaining, receiving, etc, ett)
    }

    /// Multiplies every time quantity by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &[(StationId, NormalDist)]| {
            v.iter().map(|(id, d)| (*id, NormalDist::new(d.mu * c, d.sigma * c))).collect()
        };
        let remaining = self.task.deadline - self.now;
        Self::new(self.now * c, remaining * c, self.receiving, s(&self.etc), s(&self.ett))
    }

    pub fn ctx(&self) -> AllocationContext<'_> {
        AllocationContext {
            task: &self.task,
            receiving_station: self.receiving,
            neighbor_ids: &self.neighbors,
            etc: &self.etc_m,
            ett: &self.ett_m,
            now: self.now,
        }
    }

    pub fn remaining(&self) -> f64 {
        self.task.deadline - self.now
    }
}

/// Brute-force best-probability choice: enumerate every destination,
/// integrate its completion density up to the remaining time, and apply the
/// tie and drop rules.
pub fn bp_oracle(s: &Scenario, drop_threshold: f64, tol: f64) -> Outcome {
    let remaining = s.remaining();
    let prob = |mu: f64, var: f64| {
        if var == 0.0 {
            if remaining > mu { 1.0 } else { 0.0 }
        } else {
            let sd = var.sqrt();
            quad_cdf((remaining - mu) / sd)
        }
    };
    let mut scored = Vec::new();
    let (_, local) = s.etc[0];
    scored.push((s.receiving, prob(local.mu, local.sigma * local.sigma), local.sigma));
    for (id, transfer) in &s.ett {
        let e = s.etc.iter().find(|(k, _)| k == id).unwrap().1;
        let var = e.sigma * e.sigma + transfer.sigma * transfer.sigma;
        scored.push((*id, prob(e.mu + transfer.mu, var), var.sqrt()));
    }
    let best = scored.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let mut tied: Vec<_> = scored.iter().filter(|c| best - c.1 <= tol).collect();
    tied.sort_by(|a, b| {
        a.2.partial_cmp(&b.2)
            .unwrap()
            .then((a.0 != s.receiving).cmp(&(b.0 != s.receiving)))
            .then(a.0.cmp(&b.0))
    });
    let chosen = tied[0];
    if chosen.1 < drop_threshold {
        Outcome::Drop
    } else {
        Outcome::Assign(chosen.0)
    }
}

pub fn station(id: u32, x: f64, cores: usize, mips: f64) -> StationSpec {
    StationSpec {
        id: StationId(id),
        position: Position::new(x, 0.0),
        cores,
        mips,
        neighbors: None,
    }
}

pub fn task_type(id: u32, urgent: bool, mean_length: f64, slack: f64) -> TaskTypeSpec {
    TaskTypeSpec {
        type_id: TaskTypeId(id),
        name: format!("type{id}"),
        urgent,
        length_range: [mean_length, mean_length],
        data_size_up: 2.0,
        data_size_down: 4.0,
        slack,
        requests_per_vehicle_per_hour: 1.0,
    }
}

/// Two stations 1 km apart: a 1-core 1000 MIPS station 0 and a 2-core
/// 2000 MIPS station 1. Uplink 0.25 s, downlink 0.5 s, LAN hop 2 s.
pub fn tiny_config() -> SimConfig {
    SimConfig {
        stations: vec![station(0, 0.0, 1, 1000.0), station(1, 1000.0, 2, 2000.0)],
        task_types: vec![task_type(0, false, 1000.0, 10.0), task_type(1, true, 1000.0, 0.0)],
        network: NetworkModel {
            wlan_bandwidth: 8.0,
            lan_transfer_delay: 2.0,
            wan_bandwidth: 1000.0,
            return_via_receiving: false,
        },
        reference_mips: 1000.0,
        neighbor_radius: 1000.0,
        trials: 1,
        ..SimConfig::default()
    }
}

pub fn request(time: f64, type_id: u32, length: f64, receiving: u32) -> TaskRequest {
    TaskRequest {
        time,
        type_id: TaskTypeId(type_id),
        length,
        position: Position::new(0.0, 0.0),
        data_size_up: 2.0,
        data_size_down: 4.0,
        receiving_station: StationId(receiving),
    }
}
