//! Collaborative routing.
//!
//! The objective is the total number of blocks (grid edges) driven by all
//! trucks. In baseline mode each order may only go to a truck of its own
//! carrier; in collaborative mode any truck may serve any order.

mod exact;
mod heuristic;
mod plan;

pub use exact::{solve_exact, MAX_EXACT_ORDERS, MAX_EXACT_TRUCKS};
pub use heuristic::solve_heuristic;
pub use plan::{Plan, Tour};

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{FleetEntry, TransportOrder};
use crate::alias::Alias;
use crate::gridworld::{GridError, GridMap, MarkerId, Timing};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("instance too large for exact search: {orders} orders, {trucks} trucks")]
    TooLarge { orders: usize, trucks: usize },
    #[error("no feasible plan: {0}")]
    Infeasible(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("synergy is only defined when the baseline travels at least one block")]
    DefinedOnlyForNonEmpty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Baseline,
    Collaborative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruckSlot {
    pub alias: Alias,
    pub carrier: Alias,
    pub depot: MarkerId,
    pub capacity: u32,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub map: Arc<GridMap>,
    /// Kept sorted by alias.
    pub trucks: Vec<TruckSlot>,
    pub orders: Vec<TransportOrder>,
    pub mode: Mode,
    pub timing: Timing,
}

impl Instance {
    pub fn new(
        map: Arc<GridMap>,
        mut trucks: Vec<TruckSlot>,
        orders: Vec<TransportOrder>,
        mode: Mode,
    ) -> Self {
        trucks.sort_by(|a, b| a.alias.cmp(&b.alias));
        Instance {
            map,
            trucks,
            orders,
            mode,
            timing: Timing::default(),
        }
    }

    pub fn with_timing(mut self, timing: Timing) -> Self {
        self.timing = timing;
        self
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        let mut out = self.clone();
        out.mode = mode;
        out
    }

    /// Builds the instance the orchestrator sees from carrier disclosures.
    pub fn from_disclosures(
        map: Arc<GridMap>,
        fleets: impl IntoIterator<Item = (Alias, Vec<FleetEntry>)>,
        orders: Vec<TransportOrder>,
        mode: Mode,
    ) -> Self {
        let trucks = fleets
            .into_iter()
            .flat_map(|(carrier, fleet)| {
                fleet.into_iter().map(move |f| TruckSlot {
                    alias: f.alias,
                    carrier: carrier.clone(),
                    depot: f.depot,
                    capacity: f.capacity,
                })
            })
            .collect();
        Instance::new(map, trucks, orders, mode)
    }

    pub fn from_scenario(scenario: &Scenario, mode: Mode) -> Self {
        let fleets = scenario
            .file()
            .depots
            .iter()
            .map(|d| (d.label.clone(), scenario.fleet_of(&d.label)));
        Instance::from_disclosures(scenario.map().clone(), fleets, scenario.orders(), mode)
            .with_timing(scenario.timing())
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        for w in self.trucks.windows(2) {
            if w[0].alias == w[1].alias {
                return Err(SolverError::InvalidInstance(format!(
                    "truck {} listed twice",
                    w[0].alias
                )));
            }
        }
        for t in &self.trucks {
            self.map.check_node(t.depot)?;
        }
        let mut ids = std::collections::BTreeSet::new();
        for o in &self.orders {
            self.map.check_node(o.destination)?;
            if !ids.insert(&o.order_id) {
                return Err(SolverError::InvalidInstance(format!(
                    "order {} listed twice",
                    o.order_id
                )));
            }
            if !self.trucks.iter().any(|t| t.carrier == o.carrier) {
                return Err(SolverError::InvalidInstance(format!(
                    "carrier {} of order {} owns no truck",
                    o.carrier, o.order_id
                )));
            }
        }
        let capacity: u64 = self.trucks.iter().map(|t| u64::from(t.capacity)).sum();
        let demand: u64 = self.orders.iter().map(|o| u64::from(o.demand)).sum();
        if demand > capacity {
            return Err(SolverError::Infeasible(format!(
                "total demand {demand} exceeds total capacity {capacity}"
            )));
        }
        Ok(())
    }

    pub(crate) fn allowed(&self, truck: usize, order: usize) -> bool {
        match self.mode {
            Mode::Collaborative => true,
            Mode::Baseline => self.trucks[truck].carrier == self.orders[order].carrier,
        }
    }
}

/// Exact search when the instance fits the enumeration budget, heuristic
/// otherwise.
pub fn solve(inst: &Instance) -> Result<Plan, SolverError> {
    match solve_exact(inst) {
        Err(SolverError::TooLarge { .. }) => solve_heuristic(inst),
        other => other,
    }
}

/// Relative distance saving of `post` over `pre`.
pub fn synergy(pre: &Plan, post: &Plan) -> Result<f64, SolverError> {
    synergy_blocks(pre.total_blocks, post.total_blocks)
}

pub fn synergy_blocks(pre: u32, post: u32) -> Result<f64, SolverError> {
    if pre == 0 {
        return Err(SolverError::DefinedOnlyForNonEmpty);
    }
    Ok((f64::from(pre) - f64::from(post)) / f64::from(pre))
}

/// Arrival ticks for a stop sequence, assuming departure on tick 1 and no
/// waiting at single-track segments.
pub(crate) fn arrivals_respect_windows(
    inst: &Instance,
    table: &crate::gridworld::PathTable,
    depot: MarkerId,
    seq: &[usize],
) -> bool {
    let mut blocks = 0u64;
    let mut prev = depot;
    for (k, &o) in seq.iter().enumerate() {
        let order = &inst.orders[o];
        blocks += u64::from(table.distance(prev, order.destination).unwrap_or(u32::MAX));
        prev = order.destination;
        if let Some(w) = order.time_window {
            let arrival = blocks * u64::from(inst.timing.edge_ticks.max(1))
                + k as u64 * u64::from(inst.timing.service_ticks);
            if !w.contains(arrival) {
                return false;
            }
        }
    }
    true
}
