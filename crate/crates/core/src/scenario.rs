//! Scenario files: the map, depots with their trucks, customers with their
//! demand, and motion timing.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::{AgentKind, AgentSpec, FleetEntry, OrderId, TimeWindow, TransportOrder};
use crate::alias::Alias;
use crate::gridworld::{Edge, GridError, GridMap, MarkerId, NodeLabel, SegmentId, Timing};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid grid: {0}")]
    Grid(#[from] GridError),
    #[error("node {node} ({label}) is not reachable from node {root}")]
    Disconnected {
        node: MarkerId,
        label: String,
        root: MarkerId,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn default_size() -> u16 {
    crate::gridworld::DEFAULT_SIZE
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_size")]
    pub width: u16,
    #[serde(default = "default_size")]
    pub height: u16,
    #[serde(default)]
    pub removed_edges: Vec<[MarkerId; 2]>,
    #[serde(default)]
    pub single_track: Vec<Vec<[MarkerId; 2]>>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            width: default_size(),
            height: default_size(),
            removed_edges: Vec::new(),
            single_track: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruckSpec {
    pub alias: Alias,
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepotSpec {
    pub label: Alias,
    pub marker: MarkerId,
    pub trucks: Vec<TruckSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomerSpec {
    pub label: Alias,
    pub marker: MarkerId,
    pub demand: u32,
    /// Label of the owning carrier-depot.
    pub carrier: Alias,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_window: Option<[u64; 2]>,
}

/// On-disk scenario layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub grid: GridSpec,
    pub depots: Vec<DepotSpec>,
    pub customers: Vec<CustomerSpec>,
    #[serde(default)]
    pub timing: Timing,
}

/// A parsed and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    file: ScenarioFile,
    map: Arc<GridMap>,
    content: String,
    digest: String,
}

pub const ORCHESTRATOR: &str = "orchestrator";

impl Scenario {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&content)
    }

    pub fn from_json(content: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(content)?;
        Self::build(file, content.to_owned())
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let content = serde_json::to_string_pretty(&file)?;
        Self::build(file, content)
    }

    fn build(file: ScenarioFile, content: String) -> Result<Self, ScenarioError> {
        let map = validate(&file)?;
        let digest = hex::encode(Sha256::digest(content.as_bytes()));
        Ok(Scenario {
            file,
            map: Arc::new(map),
            content,
            digest,
        })
    }

    pub fn file(&self) -> &ScenarioFile {
        &self.file
    }

    pub fn map(&self) -> &Arc<GridMap> {
        &self.map
    }

    pub fn content(&self) -> &str {
        &self.content
    }

    /// Hex SHA-256 of the scenario text.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn timing(&self) -> Timing {
        self.file.timing
    }

    pub fn orchestrator(&self) -> Alias {
        Alias::new(ORCHESTRATOR).expect("static alias")
    }

    /// One order per customer, owned by the customer's carrier.
    pub fn orders(&self) -> Vec<TransportOrder> {
        self.file
            .customers
            .iter()
            .map(|c| TransportOrder {
                order_id: order_id_for(&c.label),
                carrier: c.carrier.clone(),
                customer: c.label.clone(),
                destination: c.marker,
                demand: c.demand,
                time_window: c.time_window.map(|[open, close]| TimeWindow { open, close }),
            })
            .collect()
    }

    pub fn orders_of(&self, carrier: &Alias) -> Vec<TransportOrder> {
        self.orders().into_iter().filter(|o| &o.carrier == carrier).collect()
    }

    pub fn fleet_of(&self, carrier: &Alias) -> Vec<FleetEntry> {
        self.file
            .depots
            .iter()
            .filter(|d| &d.label == carrier)
            .flat_map(|d| {
                d.trucks.iter().map(|t| FleetEntry {
                    alias: t.alias.clone(),
                    depot: d.marker,
                    capacity: t.capacity,
                })
            })
            .collect()
    }

    pub fn fleet(&self) -> Vec<FleetEntry> {
        self.file
            .depots
            .iter()
            .flat_map(|d| self.fleet_of(&d.label))
            .collect()
    }

    /// Truck alias to owning depot label.
    pub fn truck_owners(&self) -> BTreeMap<Alias, Alias> {
        self.file
            .depots
            .iter()
            .flat_map(|d| d.trucks.iter().map(|t| (t.alias.clone(), d.label.clone())))
            .collect()
    }

    pub fn depot(&self, label: &Alias) -> Option<&DepotSpec> {
        self.file.depots.iter().find(|d| &d.label == label)
    }

    /// Launch records for every agent, in registration order: customers,
    /// depots and the orchestrator first, trucks last.
    pub fn agent_specs(&self) -> Vec<AgentSpec> {
        let mut specs = Vec::new();
        for c in &self.file.customers {
            specs.push(AgentSpec {
                alias: c.label.clone(),
                kind: AgentKind::Customer,
                home: Some(c.marker),
                capacity: None,
                nds_url: None,
            });
        }
        for d in &self.file.depots {
            specs.push(AgentSpec {
                alias: d.label.clone(),
                kind: AgentKind::Depot,
                home: Some(d.marker),
                capacity: None,
                nds_url: None,
            });
        }
        specs.push(AgentSpec {
            alias: self.orchestrator(),
            kind: AgentKind::Orchestrator,
            home: None,
            capacity: None,
            nds_url: None,
        });
        for d in &self.file.depots {
            for t in &d.trucks {
                specs.push(AgentSpec {
                    alias: t.alias.clone(),
                    kind: AgentKind::Truck,
                    home: Some(d.marker),
                    capacity: Some(t.capacity),
                    nds_url: None,
                });
            }
        }
        specs
    }
}

pub fn order_id_for(customer: &Alias) -> OrderId {
    OrderId::new(format!("ORD-{customer}"))
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

fn validate(file: &ScenarioFile) -> Result<GridMap, ScenarioError> {
    let g = &file.grid;
    if g.width == 0 || g.height == 0 {
        return Err(invalid("grid must have at least one node"));
    }
    if u32::from(g.width) * u32::from(g.height) > u32::from(u16::MAX) {
        return Err(invalid("grid too large"));
    }
    let mut map = GridMap::full(g.width, g.height);
    for [a, b] in &g.removed_edges {
        map.remove_edge(*a, *b)?;
    }
    for (i, seg) in g.single_track.iter().enumerate() {
        if seg.is_empty() {
            return Err(invalid(format!("single-track segment {} is empty", i + 1)));
        }
        let mut edges = Vec::with_capacity(seg.len());
        for [a, b] in seg {
            edges.push(map.edge(*a, *b)?);
        }
        map.add_segment(SegmentId::numbered(i), edges)?;
    }

    let mut aliases = BTreeSet::new();
    aliases.insert(Alias::new(ORCHESTRATOR).expect("static alias"));
    let mut claim = |a: &Alias| {
        if aliases.insert(a.clone()) {
            Ok(())
        } else {
            Err(invalid(format!("alias {a} is used more than once")))
        }
    };
    let mut occupied: BTreeMap<MarkerId, String> = BTreeMap::new();
    let mut capacities: BTreeMap<&Alias, u32> = BTreeMap::new();

    if file.depots.is_empty() {
        return Err(invalid("scenario has no depots"));
    }
    for d in &file.depots {
        claim(&d.label)?;
        map.check_node(d.marker)?;
        if let Some(prev) = occupied.insert(d.marker, d.label.to_string()) {
            return Err(invalid(format!("node {} holds both {prev} and {}", d.marker, d.label)));
        }
        if d.trucks.is_empty() {
            return Err(invalid(format!("depot {} has no trucks", d.label)));
        }
        let mut max_cap = 0;
        for t in &d.trucks {
            claim(&t.alias)?;
            if t.capacity == 0 {
                return Err(invalid(format!("truck {} has zero capacity", t.alias)));
            }
            max_cap = max_cap.max(t.capacity);
        }
        capacities.insert(&d.label, max_cap);
        map.label(d.marker, NodeLabel::Depot(d.label.to_string()))?;
    }
    for c in &file.customers {
        claim(&c.label)?;
        map.check_node(c.marker)?;
        if let Some(prev) = occupied.insert(c.marker, c.label.to_string()) {
            return Err(invalid(format!("node {} holds both {prev} and {}", c.marker, c.label)));
        }
        let Some(&cap) = capacities.get(&c.carrier) else {
            return Err(invalid(format!(
                "customer {} names unknown carrier {}",
                c.label, c.carrier
            )));
        };
        if c.demand == 0 {
            return Err(invalid(format!("customer {} has zero demand", c.label)));
        }
        if c.demand > cap {
            return Err(invalid(format!(
                "customer {} demand {} exceeds the largest truck of {} ({cap})",
                c.label, c.demand, c.carrier
            )));
        }
        if let Some([open, close]) = c.time_window {
            if open > close {
                return Err(invalid(format!("customer {} has an empty time window", c.label)));
            }
        }
        map.label(c.marker, NodeLabel::Customer(c.label.to_string()))?;
    }
    match map.check_labels_connected() {
        Ok(()) => {}
        Err(GridError::Disconnected { root, node }) => {
            let label = map
                .label_of(node)
                .map(|l| l.name().to_string())
                .unwrap_or_default();
            return Err(ScenarioError::Disconnected { node, label, root });
        }
        Err(e) => return Err(e.into()),
    }
    Ok(map)
}

/// Segment membership, cached as an edge lookup table.
pub fn segment_table(map: &GridMap) -> BTreeMap<Edge, SegmentId> {
    map.segments()
        .flat_map(|(id, edges)| edges.iter().map(move |e| (*e, id.clone())))
        .collect()
}

/// The bundled showcase scenario: three corner depots with one truck each
/// and nine customers, three per carrier.
pub const SHOWCASE_JSON: &str = include_str!("../scenarios/showcase.json");

pub fn showcase() -> Scenario {
    Scenario::from_json(SHOWCASE_JSON).expect("bundled showcase scenario is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn showcase_parses() {
        let s = showcase();
        assert_eq!(s.file().customers.len(), 9);
        assert_eq!(s.fleet().len(), 3);
        assert_eq!(s.agent_specs().len(), 16);
        let kinds: Vec<_> = s.agent_specs().iter().map(|a| a.kind).collect();
        let first_truck = kinds.iter().position(|k| *k == AgentKind::Truck).unwrap();
        assert!(kinds[first_truck..].iter().all(|k| *k == AgentKind::Truck));
        assert_eq!(s.digest().len(), 64);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = SHOWCASE_JSON.replacen("\"timing\"", "\"surprise\": 1, \"timing\"", 1);
        assert!(matches!(Scenario::from_json(&bad), Err(ScenarioError::Json(_))));
    }

    #[test]
    fn disconnected_customer_named() {
        let mut f = showcase().file().clone();
        // isolate C1 at node 3
        f.grid.removed_edges = vec![
            [MarkerId(3), MarkerId(2)],
            [MarkerId(3), MarkerId(4)],
            [MarkerId(3), MarkerId(8)],
        ];
        f.grid.single_track.clear();
        match Scenario::from_file(f) {
            Err(ScenarioError::Disconnected { node, label, .. }) => {
                assert_eq!(node, MarkerId(3));
                assert_eq!(label, "C1");
            }
            other => panic!("expected Disconnected, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_alias_and_overfull_demand() {
        let mut f = showcase().file().clone();
        f.customers[0].label = Alias::new("T1").unwrap();
        assert!(matches!(Scenario::from_file(f), Err(ScenarioError::Invalid(_))));

        let mut f = showcase().file().clone();
        f.customers[0].demand = 50;
        assert!(matches!(Scenario::from_file(f), Err(ScenarioError::Invalid(_))));

        let mut f = showcase().file().clone();
        f.customers[0].carrier = Alias::new("D9").unwrap();
        assert!(matches!(Scenario::from_file(f), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn missing_file_names_path() {
        let err = Scenario::from_path("/nonexistent/x.json").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.json"));
    }
}
