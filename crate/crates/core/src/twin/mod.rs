//! Digital twin: runs scenarios, records everything that happens as an
//! ordered frame log, and serves live state and streams to observers.

pub mod deploy;
pub mod engine;
pub mod frame;
pub mod gateway;
pub mod record;
pub mod snapshot;

pub use deploy::{AgentSet, Deployment, NetworkConfig};
pub use engine::{execute, RunConfig, RunError, RunShared};
pub use frame::{DeliveryRecord, EventFrame, FrameBody, FrameLog, Milestone, RunOutcome};
pub use record::{load_frames, persist_run, run_id, ReplayError, RunRecord};
pub use snapshot::{fold, Snapshot};

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::DistanceReport;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Configured,
    Running,
    Completed,
    Failed,
}

impl RunStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, RunStatus::Completed | RunStatus::Failed)
    }

    /// Configured → Running → Completed | Failed.
    pub fn can_become(self, next: RunStatus) -> bool {
        use RunStatus::*;
        matches!(
            (self, next),
            (Configured, Running) | (Configured, Failed) | (Running, Completed) | (Running, Failed)
        )
    }
}

/// How the agents of a run are connected.
#[derive(Debug, Clone)]
pub enum TransportMode {
    Local,
    Tcp(NetworkConfig),
}

/// Everything a finished run produced.
pub struct RunArtifacts {
    pub shared: Arc<RunShared>,
    pub result: Result<DistanceReport, RunError>,
}

/// Launches the agents for `scenario` and runs it to the end on the
/// calling thread. Progress is visible through `shared` meanwhile.
pub fn run_scenario(
    scenario: &Scenario,
    config: &RunConfig,
    mode: &TransportMode,
    shared: Arc<RunShared>,
) -> RunArtifacts {
    let sink = shared.frames.clone();
    let deployment = match mode {
        TransportMode::Local => Ok(Deployment::local(scenario, config.strategy, sink, config.clock)),
        TransportMode::Tcp(net) => {
            Deployment::tcp(scenario, config.strategy, sink, config.clock, net)
        }
    };
    let result = match deployment {
        Ok(mut d) => {
            let r = execute(scenario, &d, config, &shared);
            d.shutdown();
            r
        }
        Err(e) => {
            let err = RunError::Agent(e.into());
            let outcome = RunOutcome {
                status: RunStatus::Failed,
                report: None,
                error: Some(err.to_string()),
            };
            shared.frames.push(0, FrameBody::RunCompleted(outcome.clone()));
            let mut rec = shared.record.write().expect("record poisoned");
            rec.advance(RunStatus::Failed);
            rec.error = outcome.error;
            rec.frame_count = shared.frames.last_seq();
            drop(rec);
            shared.frames.close();
            Err(err)
        }
    };
    RunArtifacts { shared, result }
}

/// Fresh run state for `scenario` under `seed`.
pub fn new_run(scenario: &Scenario, seed: u64) -> Arc<RunShared> {
    let id = run_id(scenario.digest(), seed);
    RunShared::new(RunRecord::new(
        id,
        seed,
        scenario.digest(),
        scenario.file().clone(),
    ))
}

/// Writes the run's logs under `runs_dir`.
pub fn save(
    runs_dir: &Path,
    scenario: &Scenario,
    shared: &RunShared,
) -> std::io::Result<std::path::PathBuf> {
    persist_run(
        runs_dir,
        &shared.record(),
        scenario.content(),
        &shared.frames.all(),
        &shared.events(),
    )
}
