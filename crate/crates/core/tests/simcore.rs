mod common;

use common::micro::{self, rows, trace, DONE, REFRESH, START};
use common::{request, station, task_type, tiny_config};
use edgefed::metrics::miss_rate;
use edgefed::simcore::{downlink_delay, service_time, uplink_delay};
use edgefed::stochastic::sample_statistics;
use edgefed::sweep::{workload_for, write_run_csvs};
use edgefed::{PolicyKind, SimConfig, Simulation, StationId, TaskId, TaskStatus};

#[test]
fn micro_schedule_no_redirection() {
    let (reqs, expected) = micro::no_redirection();
    let (t, _) = trace(&tiny_config(), &reqs, PolicyKind::NoRedirection);
    assert_eq!(rows(&t), expected);
}

#[test]
fn micro_schedule_mect_heterogeneous() {
    let (reqs, expected) = micro::mect_heterogeneous();
    let (t, sim) = trace(&tiny_config(), &reqs, PolicyKind::MinExpectedCompletion);
    assert_eq!(rows(&t), expected);
    let ett = &sim.stations()[0].ett;
    assert_eq!(ett.samples(edgefed::TaskTypeId(0), StationId(1)).unwrap(), &[2.0, 2.0]);
}

#[test]
fn three_equal_tasks_on_two_cores() {
    let mut cfg = tiny_config();
    cfg.stations = vec![station(0, 0.0, 2, 1600.0)];
    let reqs = [request(0.0, 0, 1600.0, 0), request(0.0, 0, 1600.0, 0), request(0.0, 0, 1600.0, 0)];
    let (_, sim) = trace(&cfg, &reqs, PolicyKind::NoRedirection);
    let done: Vec<f64> = sim.tasks().iter().map(|t| t.completion_time.unwrap() - 0.25).collect();
    assert_eq!(done, [1.0, 1.0, 2.0]);
}

#[test]
fn single_task_end_to_end_delay() {
    let mut cfg = tiny_config();
    cfg.stations = vec![station(0, 0.0, 1, 1600.0)];
    cfg.task_types = vec![task_type(0, false, 2500.0, 5.0)];
    let reqs = [request(3.0, 0, 2500.0, 0)];
    let (_, sim) = trace(&cfg, &reqs, PolicyKind::BestProbability);
    let task = &sim.tasks()[0];
    let st = &sim.stations()[0];
    assert_eq!(task.status, TaskStatus::CompletedOnTime);
    assert_eq!(service_time(task, st), 1.5625);
    assert_eq!(sim.etc().samples(task.type_id, st.id).unwrap(), &[1.5625]);
    let report = sim.finish();
    let e2e = report.system.mean_e2e_delay;
    assert_eq!(e2e, 0.25 + 1.5625 + 0.5);
    assert_eq!(report.system.completed_on_time, 1);
}

fn busy_config(vehicles: u64) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.workload.vehicle_count = vehicles;
    cfg.workload.duration = 900.0;
    cfg
}

#[test]
fn delay_decomposition_and_invariants() {
    for policy in PolicyKind::ALL {
        let cfg = busy_config(4000);
        let reqs = workload_for(&cfg, 5).unwrap();
        let (trace, sim) = trace(&cfg, &reqs, policy);

        // Event causality and FCFS per station.
        let mut last = 0.0;
        let mut starts: std::collections::BTreeMap<StationId, Vec<TaskId>> = Default::default();
        for r in &trace {
            assert!(r.time >= last);
            last = r.time;
            if r.kind == START {
                starts.entry(r.station.unwrap()).or_default().push(r.task.unwrap());
            }
        }
        for (s, order) in &starts {
            let enq: Vec<f64> = order.iter().map(|t| sim.task(*t).enqueue_time.unwrap()).collect();
            assert!(enq.windows(2).all(|w| w[0] <= w[1]), "FCFS broken at station {s}");
        }

        let net = SimConfig::default().network;
        let mut sums: std::collections::BTreeMap<StationId, (f64, u64)> = Default::default();
        for t in sim.tasks() {
            if matches!(t.status, TaskStatus::Dropped) {
                assert!(t.executing_station.is_none());
                continue;
            }
            let exec = t.executing_station.unwrap();
            let station_side = t.completion_time.unwrap() - t.enqueue_time.unwrap();
            let hop = if t.was_transferred() { net.lan_transfer_delay } else { 0.0 };
            let e2e = uplink_delay(t, &net) + station_side + downlink_delay(t, &net) + hop;
            let direct = t.completion_time.unwrap() + downlink_delay(t, &net) - t.arrival_time;
            assert!((e2e - direct).abs() <= 1e-9 * direct.max(1.0));
            let e = sums.entry(exec).or_default();
            e.0 += direct;
            e.1 += 1;
            if policy == PolicyKind::NoRedirection {
                assert_eq!(exec, t.receiving_station);
            }
        }

        let report = sim.finish();
        let s = &report.system;
        assert_eq!(s.received, reqs.len() as u64);
        assert_eq!(s.received, s.completed_on_time + s.completed_late + s.dropped);
        for (id, (sum, n)) in sums {
            let c = &report.per_station[&id];
            assert_eq!(c.executed, n);
            assert!((c.mean_e2e_delay - sum / n as f64).abs() < 1e-9);
        }
        if policy == PolicyKind::NoRedirection {
            assert_eq!(report.transfers, 0);
            assert_eq!(s.dropped, 0);
        }
        assert!((0.0..=1.0).contains(&miss_rate(&report).unwrap()));
    }
}

/// Replays every refresh: each published ETC cell must equal the sample
/// statistics of its buffered history at that moment.
#[test]
fn refresh_replay_oracle() {
    let cfg = busy_config(2000);
    let reqs = workload_for(&cfg, 9).unwrap();
    let mut sim = Simulation::new(&cfg, &reqs, PolicyKind::BestProbability, 9).unwrap();
    let mut checked = 0;
    let mut completions = 0u64;
    let every = (reqs.len() as f64 * cfg.refresh_fraction).ceil() as u64;
    while let Some(r) = sim.step().unwrap() {
        if r.kind == DONE {
            completions += 1;
        }
        if r.kind != REFRESH {
            continue;
        }
        checked += 1;
        assert_eq!(completions / every, sim.refreshes());
        for cell in sim.etc().cells() {
            let hist = sim.etc().samples(cell.task_type, cell.station).unwrap();
            if let Some(d) = sample_statistics(hist) {
                assert_eq!((cell.mu, cell.sigma), (d.mu, d.sigma));
            }
        }
    }
    assert!(checked >= 9);
    assert_eq!(checked, completions / every);
}

#[test]
fn same_seed_gives_identical_csv_bytes() {
    let cfg = busy_config(1500);
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &dirs {
        let reports: Vec<_> = PolicyKind::ALL
            .iter()
            .map(|&p| {
                let reqs = workload_for(&cfg, 77).unwrap();
                Simulation::new(&cfg, &reqs, p, 77).unwrap().run().unwrap()
            })
            .collect();
        write_run_csvs(&reports, d.path()).unwrap();
    }
    for f in ["runs.csv", "stations.csv"] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn zero_vehicles_gives_empty_report() {
    let cfg = busy_config(0);
    let reqs = workload_for(&cfg, 1).unwrap();
    assert!(reqs.is_empty());
    let report = Simulation::new(&cfg, &reqs, PolicyKind::BestProbability, 1).unwrap().run().unwrap();
    assert_eq!(report.generated(), 0);
    assert_eq!(report.transfers, 0);
    assert!(report.per_station.values().all(|c| c.executed == 0 && c.received == 0));
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let mut cfg = tiny_config();
    cfg.stations[1].cores = 0;
    let err = Simulation::new(&cfg, &[], PolicyKind::NoRedirection, 0).err().unwrap();
    assert!(err.to_string().contains("stations[1].cores"), "{err}");
}
