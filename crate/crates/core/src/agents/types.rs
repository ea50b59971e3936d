use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alias::Alias;
use crate::gridworld::MarkerId;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderId(pub String);

impl OrderId {
    pub fn new(s: impl Into<String>) -> Self {
        OrderId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for OrderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Inclusive `(open, close)` tick window for the arrival at a stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub open: u64,
    pub close: u64,
}

impl TimeWindow {
    pub fn contains(&self, tick: u64) -> bool {
        self.open <= tick && tick <= self.close
    }
}

/// A delivery demand placed by a carrier on behalf of one of its customers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportOrder {
    pub order_id: OrderId,
    pub carrier: Alias,
    pub customer: Alias,
    pub destination: MarkerId,
    /// Pallets.
    pub demand: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_window: Option<TimeWindow>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Stop {
    pub marker: MarkerId,
    pub order_id: OrderId,
    /// Pallets unloaded here.
    #[serde(default)]
    pub demand: u32,
}

/// A closed tour handed from a depot to one of its trucks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportTask {
    pub task_id: String,
    pub truck: Alias,
    pub route: Vec<MarkerId>,
    pub stops: Vec<Stop>,
    /// Pallets loaded at departure.
    #[serde(default)]
    pub load: u32,
}

impl TransportTask {
    /// Closed at one depot, stops appearing along the route in order.
    pub fn is_well_formed(&self) -> bool {
        let (Some(first), Some(last)) = (self.route.first(), self.route.last()) else {
            return false;
        };
        if first != last {
            return false;
        }
        let mut cursor = 0;
        for stop in &self.stops {
            match self.route[cursor..].iter().position(|&m| m == stop.marker) {
                Some(p) => cursor += p,
                None => return false,
            }
        }
        true
    }
}

/// Fleet data a carrier discloses to the orchestrator: nothing beyond where
/// each truck lives and how much it carries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FleetEntry {
    pub alias: Alias,
    pub depot: MarkerId,
    pub capacity: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Orchestrator,
    Depot,
    Truck,
    Customer,
}

/// Launch record for one agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub alias: Alias,
    pub kind: AgentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub home: Option<MarkerId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nds_url: Option<String>,
}

impl AgentSpec {
    pub fn is_valid(&self) -> bool {
        match self.kind {
            AgentKind::Orchestrator => self.home.is_none(),
            AgentKind::Truck => self.home.is_some() && self.capacity.is_some(),
            AgentKind::Depot | AgentKind::Customer => self.home.is_some(),
        }
    }
}
