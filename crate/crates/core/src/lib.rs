//! Multi-agent collaborative logistics testbed.
//!
//! Carrier-depots, trucks, customers and an orchestrator exchange typed
//! request/reply envelopes to jointly plan and execute delivery tours on a
//! discrete grid world. A digital-twin gateway records every world change and
//! message as an event-sourced frame log and serves it over HTTP and
//! WebSocket.
//!
//! Module map:
//!
//! * [`gridworld`] - marker grid, shortest paths, deterministic truck motion.
//! * [`messaging`] - envelopes, the request/reply bus, nameserver and NDS.
//! * [`agents`] - orchestrator, depot, truck and customer behaviours.
//! * [`solver`] - exact and heuristic collaborative routing.
//! * [`twin`] - run engine, frame log, snapshots, HTTP/WebSocket gateway.
//! * [`cli`] - the `twinlog` command line.

pub mod agents;
pub mod alias;
pub mod cli;
pub mod gridworld;
pub mod messaging;
pub mod scenario;
pub mod solver;
pub mod twin;

pub use alias::{Alias, AliasError};
pub use scenario::{Scenario, ScenarioError};
