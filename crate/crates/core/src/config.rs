//! Simulation configuration: loading, defaults and validation.
//!
//! Files are TOML. Every key is optional; an empty file yields the default
//! federation of 15 stations on a 5 x 3 grid.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::heuristics::{PolicyKind, PolicyParams, DEFAULT_DROP_THRESHOLD, DEFAULT_TIE_TOLERANCE};
use crate::ids::StationId;
use crate::simcore::{NetworkModel, Position};
use crate::workload::{default_catalog, TaskTypeSpec, WorkloadConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSpec {
    pub id: StationId,
    pub position: Position,
    pub cores: usize,
    /// Million instructions per second, per core.
    pub mips: f64,
    /// Explicit federation neighbors; derived from `neighbor_radius` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbors: Option<Vec<StationId>>,
}

/// 15 stations on a 5 x 3 grid, 1 km apart, 4-core and 2-core stations in a
/// checkerboard (8 and 7 of them).
pub fn default_topology() -> Vec<StationSpec> {
    let mut out = Vec::with_capacity(15);
    for row in 0..3u32 {
        for col in 0..5u32 {
            out.push(StationSpec {
                id: StationId(row * 5 + col),
                position: Position::new(500.0 + 1000.0 * col as f64, 500.0 + 1000.0 * row as f64),
                cores: if (row + col) % 2 == 0 { 4 } else { 2 },
                mips: 1600.0,
                neighbors: None,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefreshCadence {
    /// Refresh after every `ceil(total_tasks * fraction)` completions.
    Completions { fraction: f64 },
    /// Refresh every `seconds` of simulated time.
    Interval { seconds: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub base_seed: u64,
    pub policy: PolicyKind,
    pub trials: usize,
    /// Share of the workload completed between matrix refreshes.
    pub refresh_fraction: f64,
    /// Time-based refresh period in seconds; overrides `refresh_fraction`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refresh_interval: Option<f64>,
    pub drop_threshold: f64,
    pub tie_tolerance: f64,
    /// Use the first neighbor that beats the receiving station instead of
    /// the global best.
    pub first_improvement: bool,
    /// Number of most recent samples a refresh looks at; all when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_window: Option<usize>,
    /// Per-core speed used for the reference completion time in deadlines.
    pub reference_mips: f64,
    /// Stations within this distance (meters) federate with each other.
    pub neighbor_radius: f64,
    pub network: NetworkModel,
    pub workload: WorkloadConfig,
    pub task_types: Vec<TaskTypeSpec>,
    pub stations: Vec<StationSpec>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            base_seed: 1,
            policy: PolicyKind::BestProbability,
            trials: 20,
            refresh_fraction: 0.10,
            refresh_interval: None,
            drop_threshold: DEFAULT_DROP_THRESHOLD,
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
            first_improvement: false,
            sample_window: None,
            reference_mips: 1600.0,
            neighbor_radius: 1000.0,
            network: NetworkModel::default(),
            workload: WorkloadConfig::default(),
            task_types: default_catalog(),
            stations: default_topology(),
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::ConfigParse {
            path: "<string>".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    pub fn policy_params(&self) -> PolicyParams {
        PolicyParams {
            drop_threshold: self.drop_threshold,
            tie_tolerance: self.tie_tolerance,
            first_improvement: self.first_improvement,
        }
    }

    pub fn refresh_cadence(&self) -> RefreshCadence {
        match self.refresh_interval {
            Some(seconds) => RefreshCadence::Interval { seconds },
            None => RefreshCadence::Completions {
                fraction: self.refresh_fraction,
            },
        }
    }

    /// Federation neighbors of every station, sorted by id.
    pub fn neighbor_map(&self) -> BTreeMap<StationId, Vec<StationId>> {
        let r2 = self.neighbor_radius * self.neighbor_radius;
        self.stations
            .iter()
            .map(|s| {
                let mut n = match &s.neighbors {
                    Some(explicit) => explicit.clone(),
                    None => self
                        .stations
                        .iter()
                        .filter(|o| o.id != s.id && o.position.distance_squared(&s.position) <= r2)
                        .map(|o| o.id)
                        .collect(),
                };
                n.sort();
                n.dedup();
                (s.id, n)
            })
            .collect()
    }

    /// Short hash identifying everything that shapes a run except the seed,
    /// the policy and the trial count.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.base_seed = 0;
        canonical.policy = PolicyKind::NoRedirection;
        canonical.trials = 1;
        let hash = Sha256::digest(canonical.to_toml_string().as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Checks every invariant, naming the first offending key.
    pub fn validate(&self) -> Result<()> {
        fn positive(key: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(key, format!("must be a positive number, got {v}")))
            }
        }
        fn non_negative(key: &str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(key, format!("must be a non-negative number, got {v}")))
            }
        }

        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if !(self.refresh_fraction > 0.0 && self.refresh_fraction <= 1.0) {
            return Err(Error::invalid("refresh_fraction", "must lie in (0, 1]"));
        }
        if let Some(s) = self.refresh_interval {
            positive("refresh_interval", s)?;
        }
        if !(0.0..1.0).contains(&self.drop_threshold) {
            return Err(Error::invalid("drop_threshold", "must lie in [0, 1)"));
        }
        non_negative("tie_tolerance", self.tie_tolerance)?;
        if matches!(self.sample_window, Some(w) if w < 2) {
            return Err(Error::invalid("sample_window", "must hold at least 2 samples"));
        }
        positive("reference_mips", self.reference_mips)?;
        non_negative("neighbor_radius", self.neighbor_radius)?;

        positive("network.wlan_bandwidth", self.network.wlan_bandwidth)?;
        non_negative("network.lan_transfer_delay", self.network.lan_transfer_delay)?;
        positive("network.wan_bandwidth", self.network.wan_bandwidth)?;

        positive("workload.duration", self.workload.duration)?;
        if let Some(f) = self.workload.urgent_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::invalid("workload.urgent_fraction", "must lie in [0, 1]"));
            }
        }
        positive("workload.area[0]", self.workload.area[0])?;
        positive("workload.area[1]", self.workload.area[1])?;

        if self.task_types.is_empty() {
            return Err(Error::invalid("task_types", "at least one task type is required"));
        }
        let mut seen_types = std::collections::BTreeSet::new();
        for (i, t) in self.task_types.iter().enumerate() {
            let key = |field: &str| format!("task_types[{i}].{field}");
            if !seen_types.insert(t.type_id) {
                return Err(Error::invalid(key("type_id"), format!("duplicate type id {}", t.type_id)));
            }
            let [lo, hi] = t.length_range;
            positive(&key("length_range[0]"), lo)?;
            positive(&key("length_range[1]"), hi)?;
            if lo > hi {
                return Err(Error::invalid(key("length_range"), "min exceeds max"));
            }
            positive(&key("data_size_up"), t.data_size_up)?;
            positive(&key("data_size_down"), t.data_size_down)?;
            non_negative(&key("slack"), t.slack)?;
            non_negative(&key("requests_per_vehicle_per_hour"), t.requests_per_vehicle_per_hour)?;
        }

        if self.stations.is_empty() {
            return Err(Error::invalid("stations", "at least one station is required"));
        }
        let ids: std::collections::BTreeSet<_> = self.stations.iter().map(|s| s.id).collect();
        if ids.len() != self.stations.len() {
            return Err(Error::invalid("stations", "station ids must be unique"));
        }
        for (i, s) in self.stations.iter().enumerate() {
            let key = |field: &str| format!("stations[{i}].{field}");
            if s.cores == 0 {
                return Err(Error::invalid(key("cores"), "must be at least 1"));
            }
            positive(&key("mips"), s.mips)?;
            if !(s.position.x.is_finite() && s.position.y.is_finite()) {
                return Err(Error::invalid(key("position"), "must be finite"));
            }
            for n in s.neighbors.iter().flatten() {
                if *n == s.id {
                    return Err(Error::invalid(key("neighbors"), "a station cannot neighbor itself"));
                }
                if !ids.contains(n) {
                    return Err(Error::invalid(key("neighbors"), format!("unknown station {n}")));
                }
            }
        }
        Ok(())
    }
}

/// Reads and validates a config file. Missing keys take their defaults.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::ConfigNotFound {
            path: path.to_path_buf(),
        },
        _ => Error::Io(e),
    })?;
    let cfg: SimConfig = toml::from_str(&text).map_err(|e| Error::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = SimConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, SimConfig::default());
        assert_eq!(cfg.stations.len(), 15);
        assert_eq!(cfg.stations.iter().filter(|s| s.cores == 4).count(), 8);
        assert_eq!(cfg.stations.iter().filter(|s| s.cores == 2).count(), 7);
        assert!(cfg.stations.iter().all(|s| s.mips == 1600.0));
        assert_eq!(cfg.refresh_fraction, 0.10);
        assert_eq!(cfg.trials, 20);
        assert_eq!(cfg.task_types.iter().filter(|t| t.urgent).count(), 2);
        assert_eq!(cfg.task_types.len(), 4);
    }

    #[test]
    fn zero_cores_names_the_key() {
        let text = r#"
[[stations]]
id = 0
position = { x = 0.0, y = 0.0 }
cores = 0
mips = 1600.0
"#;
        match SimConfig::from_toml_str(text) {
            Err(Error::InvalidConfig { key, .. }) => assert_eq!(key, "stations[0].cores"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_a_parse_error() {
        assert!(matches!(
            SimConfig::from_toml_str("vehicles = 3\n"),
            Err(Error::ConfigParse { .. })
        ));
    }

    #[test]
    fn integers_accepted_for_float_fields() {
        let cfg = SimConfig::from_toml_str("[network]\nwlan_bandwidth = 400\n").unwrap();
        assert_eq!(cfg.network.wlan_bandwidth, 400.0);
    }

    #[test]
    fn dump_and_reload_is_identity() {
        let mut cfg = SimConfig::default();
        cfg.workload.urgent_fraction = Some(0.3);
        cfg.sample_window = Some(50);
        cfg.stations[2].neighbors = Some(vec![StationId(1), StationId(3)]);
        let back = SimConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn default_neighbors_are_grid_adjacent() {
        let cfg = SimConfig::default();
        let n = cfg.neighbor_map();
        assert_eq!(n[&StationId(0)], vec![StationId(1), StationId(5)]);
        assert_eq!(
            n[&StationId(7)],
            vec![StationId(2), StationId(6), StationId(8), StationId(12)]
        );
    }

    #[test]
    fn digest_ignores_seed_and_policy() {
        let a = SimConfig::default();
        let mut b = a.clone();
        b.base_seed = 99;
        b.policy = PolicyKind::MaxCertainty;
        assert_eq!(a.digest(), b.digest());
        b.workload.vehicle_count += 1;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn missing_file_is_distinct() {
        let err = load_config(Path::new("/nonexistent/edgefed.toml")).unwrap_err();
        assert!(matches!(err, Error::ConfigNotFound { .. }));
    }
}
