//! The single-writer run loop: plans, ticks the world, lets trucks react
//! and publishes frames and snapshots as it goes.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use super::deploy::Deployment;
use super::frame::{DeliveryRecord, FrameBody, FrameLog, Milestone, RunOutcome};
use super::record::RunRecord;
use super::snapshot::Snapshot;
use super::RunStatus;
use crate::agents::{AgentError, DistanceReport, SolveStrategy, TruckNote};
use crate::alias::Alias;
use crate::gridworld::{TruckState, World, WorldEvent};
use crate::messaging::ClockMode;
use crate::scenario::Scenario;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub strategy: SolveStrategy,
    pub clock: ClockMode,
    /// Ticks per wall-clock second; 0 runs flat out.
    pub speed: f64,
    /// Fail the run past this tick; defaults to a bound derived from the plan.
    pub max_ticks: Option<u64>,
    /// Keep every intermediate snapshot (for consistency checks).
    pub keep_checkpoints: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            strategy: SolveStrategy::Auto,
            clock: ClockMode::Simulated,
            speed: 0.0,
            max_ticks: None,
            keep_checkpoints: false,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("run aborted")]
    Aborted,
    #[error("run did not finish within {0} ticks")]
    TickBudget(u64),
}

/// State of one run visible to observers while it executes.
pub struct RunShared {
    pub run_id: String,
    pub frames: Arc<FrameLog>,
    pub snapshot: RwLock<Snapshot>,
    pub record: RwLock<RunRecord>,
    pub events: Mutex<Vec<WorldEvent>>,
    pub checkpoints: Mutex<Vec<Snapshot>>,
    abort: AtomicBool,
}

impl RunShared {
    pub fn new(record: RunRecord) -> Arc<Self> {
        Arc::new(RunShared {
            run_id: record.run_id.clone(),
            frames: Arc::new(FrameLog::new()),
            snapshot: RwLock::new(Snapshot::default()),
            record: RwLock::new(record),
            events: Mutex::default(),
            checkpoints: Mutex::default(),
            abort: AtomicBool::new(false),
        })
    }

    pub fn abort(&self) {
        self.abort.store(true, Ordering::SeqCst);
    }

    pub fn snapshot(&self) -> Snapshot {
        self.snapshot.read().expect("snapshot poisoned").clone()
    }

    pub fn record(&self) -> RunRecord {
        self.record.read().expect("record poisoned").clone()
    }

    pub fn status(&self) -> RunStatus {
        self.record.read().expect("record poisoned").status
    }

    pub fn events(&self) -> Vec<WorldEvent> {
        self.events.lock().expect("events poisoned").clone()
    }

    pub fn checkpoints(&self) -> Vec<Snapshot> {
        self.checkpoints.lock().expect("checkpoints poisoned").clone()
    }

    fn set_status(&self, status: RunStatus) {
        self.record.write().expect("record poisoned").advance(status);
    }
}

struct Runner<'a> {
    shared: &'a RunShared,
    deployment: &'a Deployment,
    config: &'a RunConfig,
    world: World,
    published: BTreeMap<Alias, TruckState>,
    deliveries: Vec<DeliveryRecord>,
}

impl Runner<'_> {
    fn frames(&self) -> &FrameLog {
        &self.shared.frames
    }

    /// Emits the trucks whose state changed; `always` forces a frame even
    /// when nothing did, so the frame log carries every tick.
    fn flush(&mut self, always: bool) {
        let changed: Vec<TruckState> = self
            .world
            .trucks()
            .values()
            .filter(|t| self.published.get(&t.truck) != Some(*t))
            .cloned()
            .collect();
        if changed.is_empty() && !always {
            return;
        }
        for t in &changed {
            self.published.insert(t.truck.clone(), t.clone());
        }
        self.shared
            .frames
            .push(self.world.current_tick(), FrameBody::TruckMoved(changed));
    }

    /// Publishes the live view, built from the world itself.
    fn checkpoint(&self, status: RunStatus, report: Option<DistanceReport>) {
        let snap = Snapshot {
            tick: self.world.current_tick(),
            last_seq: self.frames().last_seq(),
            status,
            trucks: self.world.trucks().clone(),
            deliveries: self.deliveries.clone(),
            message_count: self.frames().message_count(),
            report,
        };
        if self.config.keep_checkpoints {
            self.shared
                .checkpoints
                .lock()
                .expect("checkpoints poisoned")
                .push(snap.clone());
        }
        *self.shared.snapshot.write().expect("snapshot poisoned") = snap;
    }

    fn notes(&mut self, notes: Vec<TruckNote>) {
        for note in notes {
            if let TruckNote::Delivered {
                truck,
                customer,
                order_id,
                node,
                tick,
            } = note
            {
                let d = DeliveryRecord {
                    truck,
                    customer,
                    order_id,
                    node,
                    tick,
                };
                self.deliveries.push(d.clone());
                let milestone = Milestone::delivered(&d);
                self.shared.frames.push(tick, FrameBody::DeliveryCompleted(d));
                self.shared.frames.push(tick, FrameBody::Milestone(milestone));
            }
        }
    }

    fn step(&mut self) -> Result<(), RunError> {
        let trucks = &self.deployment.agents.trucks;
        let bus = &self.deployment.bus;
        let mut held = BTreeSet::new();
        for (alias, agent) in trucks {
            let mut notes = Vec::new();
            let blocked = agent
                .lock()
                .expect("truck poisoned")
                .pre_move(&mut self.world, bus, &mut notes)?;
            if blocked {
                held.insert(alias.clone());
            }
            self.notes(notes);
            self.flush(false);
            self.checkpoint(RunStatus::Running, None);
        }
        if self.world.is_complete() {
            return Ok(());
        }
        let events = self.world.tick_with(&held);
        self.shared
            .events
            .lock()
            .expect("events poisoned")
            .extend(events.iter().cloned());
        self.flush(true);
        self.checkpoint(RunStatus::Running, None);
        for agent in trucks.values() {
            let mut notes = Vec::new();
            agent
                .lock()
                .expect("truck poisoned")
                .after_tick(&mut self.world, bus, &events, &mut notes)?;
            self.notes(notes);
            self.flush(false);
            self.checkpoint(RunStatus::Running, None);
        }
        Ok(())
    }

    fn tick_budget(&self) -> u64 {
        if let Some(m) = self.config.max_ticks {
            return m;
        }
        let timing = self.world.timing();
        let orch = self.deployment.agents.orchestrator.lock().expect("orchestrator poisoned");
        let work: u64 = orch
            .plan()
            .map(|p| {
                p.tours
                    .values()
                    .map(|t| {
                        u64::from(t.blocks) * u64::from(timing.edge_ticks.max(1))
                            + t.stops.len() as u64 * u64::from(timing.service_ticks)
                    })
                    .sum()
            })
            .unwrap_or(0);
        // each truck may in the worst case wait out all the others
        (work + 1) * (self.world.trucks().len() as u64 + 1) + 16
    }

    fn run(&mut self) -> Result<DistanceReport, RunError> {
        let agents = &self.deployment.agents;
        let bus = &self.deployment.bus;
        self.flush(true);
        self.checkpoint(RunStatus::Running, None);
        for depot in agents.depots.values() {
            depot.lock().expect("depot poisoned").submit(bus, 0)?;
        }
        {
            let mut orch = agents.orchestrator.lock().expect("orchestrator poisoned");
            orch.compute_plans()?;
            let mut rec = self.shared.record.write().expect("record poisoned");
            rec.plan_pre = orch.baseline().cloned();
            rec.plan_post = orch.plan().cloned();
            drop(rec);
            orch.dispatch_plans(bus, 0)?;
        }
        self.checkpoint(RunStatus::Running, None);

        let budget = self.tick_budget();
        let pause = (self.config.speed > 0.0).then(|| Duration::from_secs_f64(1.0 / self.config.speed));
        while !self.world.is_complete() {
            if self.shared.abort.load(Ordering::SeqCst) {
                return Err(RunError::Aborted);
            }
            if self.world.current_tick() >= budget {
                return Err(RunError::TickBudget(budget));
            }
            self.step()?;
            if let Some(p) = pause {
                std::thread::sleep(p);
            }
        }
        let tick = self.world.current_tick();
        let orch = agents.orchestrator.lock().expect("orchestrator poisoned");
        Ok(orch.broadcast_report(bus, tick)?)
    }
}

/// Runs `scenario` to completion on an already launched deployment whose
/// message sink is `shared.frames`.
pub fn execute(
    scenario: &Scenario,
    deployment: &Deployment,
    config: &RunConfig,
    shared: &RunShared,
) -> Result<DistanceReport, RunError> {
    let mut world = World::new(scenario.map().clone(), scenario.timing());
    for d in &scenario.file().depots {
        for t in &d.trucks {
            world
                .add_truck(t.alias.clone(), d.marker)
                .map_err(AgentError::from)?;
        }
    }
    shared.set_status(RunStatus::Running);
    shared.record.write().expect("record poisoned").started_tick = Some(0);
    let mut runner = Runner {
        shared,
        deployment,
        config,
        world,
        published: BTreeMap::new(),
        deliveries: Vec::new(),
    };
    let result = runner.run();
    let tick = runner.world.current_tick();
    let outcome = match &result {
        Ok(report) => RunOutcome {
            status: RunStatus::Completed,
            report: Some(report.clone()),
            error: None,
        },
        Err(e) => RunOutcome {
            status: RunStatus::Failed,
            report: None,
            error: Some(e.to_string()),
        },
    };
    shared.frames.push(tick, FrameBody::RunCompleted(outcome.clone()));
    runner.checkpoint(outcome.status, outcome.report.clone());
    {
        let mut rec = shared.record.write().expect("record poisoned");
        rec.advance(outcome.status);
        rec.ended_tick = Some(tick);
        rec.reduction = outcome.report;
        rec.error = outcome.error;
        rec.frame_count = shared.frames.last_seq();
        rec.message_count = shared.frames.message_count();
        rec.event_count = shared.events.lock().expect("events poisoned").len() as u64;
    }
    shared.frames.close();
    result
}
