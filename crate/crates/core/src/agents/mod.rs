//! Agent behaviours.

pub mod conformance;
mod customer;
mod depot;
mod orchestrator;
mod report;
mod truck;
mod types;

pub use customer::CustomerAgent;
pub use depot::DepotAgent;
pub use orchestrator::{OrchestratorAgent, SolveStrategy};
pub use report::{DistanceReport, TruckReduction};
pub use truck::{TruckAgent, TruckNote, CONFIRM_ATTEMPTS};
pub use types::{
    AgentKind, AgentSpec, FleetEntry, OrderId, Stop, TimeWindow, TransportOrder, TransportTask,
};

use crate::alias::Alias;
use crate::gridworld::GridError;
use crate::messaging::{MessagingError, MsgType};
use crate::solver::SolverError;

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Messaging(#[from] MessagingError),
    #[error("{by} refused {msg_type}: {reason}")]
    Refused {
        by: Alias,
        msg_type: MsgType,
        reason: String,
    },
    #[error("no feasible assignment: {0}")]
    SolverInfeasible(String),
    #[error(transparent)]
    Solver(SolverError),
    #[error("waiting on order submissions from {0:?}")]
    MissingSubmissions(Vec<Alias>),
    #[error("run incomplete, no fulfilment from {0:?}")]
    IncompleteRun(Vec<Alias>),
    #[error(transparent)]
    World(#[from] GridError),
}
