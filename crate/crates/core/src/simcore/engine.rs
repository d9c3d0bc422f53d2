//! The event loop.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use crate::config::{RefreshCadence, SimConfig};
use crate::error::{Error, Result};
use crate::heuristics::{build_policy, AllocationContext, AllocationPolicy, Outcome, PolicyKind};
use crate::ids::{StationId, TaskId, TaskTypeId};
use crate::metrics::{MetricsCollector, MetricsReport};
use crate::stochastic::{NormalDist, ProfileKind, ProfileMatrix};
use crate::workload::{TaskRequest, TaskTypeSpec};

use super::event::{EventKind, EventQueue};
use super::{
    compute_deadline, downlink_delay, service_time, uplink_delay, BaseStationState, NetworkModel,
    Task, TaskStatus,
};

/// One processed event, as written to the event-trace dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub kind: &'static str,
    pub task: Option<TaskId>,
    pub station: Option<StationId>,
    pub status: Option<TaskStatus>,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t", self.time, self.kind)?;
        match self.task {
            Some(t) => write!(f, "{t}\t")?,
            None => f.write_str("-\t")?,
        }
        match self.station {
            Some(s) => write!(f, "{s}\t")?,
            None => f.write_str("-\t")?,
        }
        f.write_str(self.status.map_or("-", |s| s.as_str()))
    }
}

/// A single simulation run over a fixed workload.
pub struct Simulation {
    policy: Box<dyn AllocationPolicy>,
    policy_kind: PolicyKind,
    network: NetworkModel,
    cadence: RefreshCadence,
    refresh_every: Option<u64>,
    now: f64,
    events: EventQueue,
    tasks: Vec<Task>,
    stations: Vec<BaseStationState>,
    station_index: BTreeMap<StationId, usize>,
    etc: ProfileMatrix,
    completions: u64,
    refreshes: u64,
    collector: MetricsCollector,
}

impl Simulation {
    /// Builds the federation from `config` and schedules every request's
    /// arrival at its receiving station.
    pub fn new(
        config: &SimConfig,
        requests: &[TaskRequest],
        policy: PolicyKind,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let types: BTreeMap<TaskTypeId, &TaskTypeSpec> =
            config.task_types.iter().map(|t| (t.type_id, t)).collect();
        let neighbors = config.neighbor_map();

        let mut stations = Vec::with_capacity(config.stations.len());
        let mut station_index = BTreeMap::new();
        for spec in &config.stations {
            let nbrs = neighbors[&spec.id].clone();
            let mut st = BaseStationState::new(spec.id, spec.position, spec.cores, spec.mips, nbrs);
            st.ett = ProfileMatrix::with_priors(
                ProfileKind::Ett,
                types.values().flat_map(|t| {
                    let prior = ett_prior(t, &config.network);
                    st.neighbor_ids.iter().map(move |&n| ((t.type_id, n), prior))
                }),
            )
            .with_window(config.sample_window);
            station_index.insert(spec.id, stations.len());
            stations.push(st);
        }

        let etc = ProfileMatrix::with_priors(
            ProfileKind::Etc,
            types.values().flat_map(|t| {
                config
                    .stations
                    .iter()
                    .map(move |s| ((t.type_id, s.id), etc_prior(t, s.mips)))
            }),
        )
        .with_window(config.sample_window);

        let mut collector = MetricsCollector::new(config.stations.iter().map(|s| s.id));
        let mut events = EventQueue::default();
        let mut tasks = Vec::with_capacity(requests.len());
        for (idx, req) in requests.iter().enumerate() {
            let ty = types
                .get(&req.type_id)
                .ok_or(Error::UnknownTaskType(req.type_id))?;
            if !station_index.contains_key(&req.receiving_station) {
                return Err(Error::UnknownStation(req.receiving_station));
            }
            let mut task = Task {
                id: TaskId(idx as u64),
                type_id: req.type_id,
                length: req.length,
                data_size_up: req.data_size_up,
                data_size_down: req.data_size_down,
                urgent: ty.urgent,
                origin_position: req.position,
                arrival_time: req.time,
                deadline: 0.0,
                receiving_station: req.receiving_station,
                executing_station: None,
                status: TaskStatus::Pending,
                transfer_start: None,
                enqueue_time: None,
                start_time: None,
                completion_time: None,
            };
            let e_ref = ty.mean_length() / config.reference_mips;
            task.deadline = compute_deadline(&task, e_ref, ty.slack, &config.network);
            events.push(
                task.arrival_time + uplink_delay(&task, &config.network),
                EventKind::TaskArrival { task: task.id },
            );
            collector.record_received(task.receiving_station);
            tasks.push(task);
        }

        let cadence = config.refresh_cadence();
        let refresh_every = match cadence {
            RefreshCadence::Completions { fraction } if !tasks.is_empty() => {
                Some(((tasks.len() as f64 * fraction).ceil() as u64).max(1))
            }
            _ => None,
        };
        if let RefreshCadence::Interval { seconds } = cadence {
            if !tasks.is_empty() {
                events.push(seconds, EventKind::MatrixRefresh);
            }
        }

        Ok(Self {
            policy: build_policy(policy, config.policy_params()),
            policy_kind: policy,
            network: config.network,
            cadence,
            refresh_every,
            now: 0.0,
            events,
            tasks,
            stations,
            station_index,
            etc,
            completions: 0,
            refreshes: 0,
            collector: collector.with_identity(policy, seed, config),
        })
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task(&self, id: TaskId) -> &Task {
        &self.tasks[id.0 as usize]
    }

    pub fn stations(&self) -> &[BaseStationState] {
        &self.stations
    }

    pub fn station(&self, id: StationId) -> Option<&BaseStationState> {
        self.station_index.get(&id).map(|&i| &self.stations[i])
    }

    pub fn etc(&self) -> &ProfileMatrix {
        &self.etc
    }

    pub fn refreshes(&self) -> u64 {
        self.refreshes
    }

    pub fn policy(&self) -> PolicyKind {
        self.policy_kind
    }

    pub fn pending_events(&self) -> usize {
        self.events.len()
    }

    /// Processes the next event. Returns `None` once the queue is drained.
    pub fn step(&mut self) -> Result<Option<TraceRecord>> {
        let Some(ev) = self.events.pop() else {
            return Ok(None);
        };
        debug_assert!(ev.time >= self.now, "event at {} before clock {}", ev.time, self.now);
        self.now = ev.time;
        let station = match ev.kind {
            EventKind::TaskArrival { task } => self.on_arrival(task)?,
            EventKind::TransferComplete { task, destination } => {
                self.on_transfer_complete(task, destination)?;
                Some(destination)
            }
            EventKind::ExecutionStart { task, station, .. } => {
                let t = &mut self.tasks[task.0 as usize];
                t.set_status(TaskStatus::Executing);
                t.start_time = Some(self.now);
                Some(station)
            }
            EventKind::ExecutionComplete {
                task,
                station,
                core,
            } => {
                self.on_execution_complete(task, station, core)?;
                Some(station)
            }
            EventKind::MatrixRefresh => {
                self.refresh_matrices();
                None
            }
        };
        Ok(Some(TraceRecord {
            time: ev.time,
            kind: ev.kind.name(),
            task: ev.kind.task(),
            station,
            status: ev.kind.task().map(|t| self.tasks[t.0 as usize].status),
        }))
    }

    /// Runs to completion and returns the report.
    pub fn run(mut self) -> Result<MetricsReport> {
        while self.step()?.is_some() {}
        Ok(self.finish())
    }

    /// Runs to completion, writing one trace line per event to `sink`.
    pub fn run_traced(mut self, sink: &mut dyn Write) -> Result<MetricsReport> {
        while let Some(rec) = self.step()? {
            writeln!(sink, "{rec}")?;
        }
        Ok(self.finish())
    }

    /// Final report; call after the queue is drained.
    pub fn finish(self) -> MetricsReport {
        debug_assert!(self.events.is_empty());
        self.collector.finish()
    }

    fn idx(&self, station: StationId) -> Result<usize> {
        self.station_index
            .get(&station)
            .copied()
            .ok_or(Error::UnknownStation(station))
    }

    fn on_arrival(&mut self, id: TaskId) -> Result<Option<StationId>> {
        let task = &self.tasks[id.0 as usize];
        let receiving = task.receiving_station;
        let st = &self.stations[self.idx(receiving)?];
        let ctx = AllocationContext {
            task,
            receiving_station: receiving,
            neighbor_ids: &st.neighbor_ids,
            etc: &self.etc,
            ett: &st.ett,
            now: self.now,
        };
        let decision = self.policy.decide(&ctx)?;
        self.dispatch(id, decision.outcome)?;
        Ok(Some(receiving))
    }

    /// Applies a Load Balancer decision to an arriving task.
    fn dispatch(&mut self, id: TaskId, outcome: Outcome) -> Result<()> {
        let now = self.now;
        let receiving = self.tasks[id.0 as usize].receiving_station;
        match outcome {
            Outcome::Drop => {
                self.tasks[id.0 as usize].set_status(TaskStatus::Dropped);
                self.collector.record_drop(receiving);
            }
            Outcome::Assign(target) if target == receiving => {
                self.tasks[id.0 as usize].executing_station = Some(target);
                self.enqueue(id, target)?;
            }
            Outcome::Assign(target) => {
                let st = &self.stations[self.idx(receiving)?];
                if !st.neighbor_ids.contains(&target) {
                    return Err(Error::UnknownStation(target));
                }
                let task = &mut self.tasks[id.0 as usize];
                task.set_status(TaskStatus::Transferring);
                task.executing_station = Some(target);
                task.transfer_start = Some(now);
                self.collector.record_transfer();
                self.events.push(
                    now + self.network.lan_transfer_delay,
                    EventKind::TransferComplete {
                        task: id,
                        destination: target,
                    },
                );
            }
        }
        Ok(())
    }

    fn on_transfer_complete(&mut self, id: TaskId, destination: StationId) -> Result<()> {
        let task = &self.tasks[id.0 as usize];
        let started = task.transfer_start.expect("transferring task has a start time");
        let (type_id, receiving) = (task.type_id, task.receiving_station);
        let ri = self.idx(receiving)?;
        self.stations[ri]
            .ett
            .record_sample(type_id, destination, self.now - started)?;
        self.enqueue(id, destination)
    }

    fn enqueue(&mut self, id: TaskId, station: StationId) -> Result<()> {
        let si = self.idx(station)?;
        let task = &mut self.tasks[id.0 as usize];
        task.set_status(TaskStatus::Queued);
        task.enqueue_time = Some(self.now);
        self.stations[si].queue.push_back(id);
        self.step_station(si);
        Ok(())
    }

    /// Starts queued tasks on idle cores, head of the queue first.
    fn step_station(&mut self, si: usize) {
        let now = self.now;
        loop {
            let st = &self.stations[si];
            let (Some(core), Some(&head)) = (st.free_core(), st.queue.front()) else {
                break;
            };
            let done = now + service_time(&self.tasks[head.0 as usize], st);
            let st = &mut self.stations[si];
            st.queue.pop_front();
            st.occupy(core, head, done);
            let station = st.id;
            self.events.push(
                now,
                EventKind::ExecutionStart {
                    task: head,
                    station,
                    core,
                },
            );
            self.events.push(
                done,
                EventKind::ExecutionComplete {
                    task: head,
                    station,
                    core,
                },
            );
        }
    }

    fn on_execution_complete(&mut self, id: TaskId, station: StationId, core: usize) -> Result<()> {
        let si = self.idx(station)?;
        let released = self.stations[si].release(core);
        debug_assert_eq!(released, Some(id));

        let now = self.now;
        let extra_hop = self.return_hop(&self.tasks[id.0 as usize]);
        let task = &mut self.tasks[id.0 as usize];
        task.completion_time = Some(now);
        let enqueued = task.enqueue_time.expect("executed task was enqueued");
        let started = task.start_time.expect("executed task was started");
        let delivered = now + downlink_delay(task, &self.network) + extra_hop;
        let on_time = delivered <= task.deadline;
        task.set_status(if on_time {
            TaskStatus::CompletedOnTime
        } else {
            TaskStatus::CompletedLate
        });
        let type_id = task.type_id;
        self.collector
            .record_completion(station, on_time, started - enqueued, delivered - task.arrival_time);
        self.etc.record_sample(type_id, station, now - enqueued)?;

        self.completions += 1;
        if let Some(every) = self.refresh_every {
            if self.completions.is_multiple_of(every) {
                self.events.push(now, EventKind::MatrixRefresh);
            }
        }
        self.step_station(si);
        Ok(())
    }

    fn return_hop(&self, task: &Task) -> f64 {
        if self.network.return_via_receiving && task.was_transferred() {
            self.network.lan_transfer_delay
        } else {
            0.0
        }
    }

    fn refresh_matrices(&mut self) {
        self.etc.refresh();
        for st in &mut self.stations {
            st.ett.refresh();
        }
        self.refreshes += 1;
        if let RefreshCadence::Interval { seconds } = self.cadence {
            if !self.events.is_empty() {
                self.events.push(self.now + seconds, EventKind::MatrixRefresh);
            }
        }
    }
}

/// Capacity-derived completion prior: mean length over per-core speed.
pub(crate) fn etc_prior(ty: &TaskTypeSpec, mips: f64) -> NormalDist {
    let mean = ty.mean_length() / mips;
    NormalDist::new(mean, 0.1 * mean)
}

/// Transfer prior: one LAN hop plus the upload over the backhaul.
pub(crate) fn ett_prior(ty: &TaskTypeSpec, net: &NetworkModel) -> NormalDist {
    let mean = net.lan_transfer_delay + ty.data_size_up / net.wan_bandwidth;
    NormalDist::new(mean, 0.1 * mean)
}
