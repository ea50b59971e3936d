use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::map::{Edge, GridMap};
use super::marker::MarkerId;
use super::GridError;
use crate::alias::Alias;

/// Motion constants, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub edge_ticks: u32,
    pub service_ticks: u32,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            edge_ticks: 1,
            service_ticks: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Parked,
    EnRoute,
    Serving,
    Returning,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Traversal {
    pub edge: Edge,
    pub ticks_remaining: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruckState {
    pub truck: Alias,
    pub at: MarkerId,
    pub traversing: Option<Traversal>,
    /// Nodes still to visit, excluding `at`.
    pub route: Vec<MarkerId>,
    pub phase: Phase,
    pub cargo: u32,
    pub service_left: u32,
}

impl TruckState {
    pub fn parked(truck: Alias, at: MarkerId) -> Self {
        TruckState {
            truck,
            at,
            traversing: None,
            route: Vec::new(),
            phase: Phase::Parked,
            cargo: 0,
            service_left: 0,
        }
    }

    /// The edge the truck will take next, when it is standing at a node.
    pub fn next_edge(&self) -> Option<Edge> {
        if self.traversing.is_some() {
            return None;
        }
        self.route.first().map(|&n| Edge::new(self.at, n))
    }

    fn moving(&self) -> bool {
        matches!(self.phase, Phase::EnRoute | Phase::Returning)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum WorldEvent {
    EdgeEntered { truck: Alias, edge: Edge, tick: u64 },
    ArrivedAtNode { truck: Alias, node: MarkerId, tick: u64 },
    ServiceComplete { truck: Alias, node: MarkerId, tick: u64 },
}

impl WorldEvent {
    pub fn truck(&self) -> &Alias {
        match self {
            WorldEvent::EdgeEntered { truck, .. }
            | WorldEvent::ArrivedAtNode { truck, .. }
            | WorldEvent::ServiceComplete { truck, .. } => truck,
        }
    }
}

/// Truck positions on a fixed map; advanced one tick at a time by a single
/// writer.
#[derive(Debug, Clone)]
pub struct World {
    map: Arc<GridMap>,
    timing: Timing,
    tick: u64,
    trucks: BTreeMap<Alias, TruckState>,
}

impl World {
    pub fn new(map: Arc<GridMap>, timing: Timing) -> Self {
        World {
            map,
            timing,
            tick: 0,
            trucks: BTreeMap::new(),
        }
    }

    pub fn map(&self) -> &Arc<GridMap> {
        &self.map
    }

    pub fn timing(&self) -> Timing {
        self.timing
    }

    pub fn current_tick(&self) -> u64 {
        self.tick
    }

    pub fn trucks(&self) -> &BTreeMap<Alias, TruckState> {
        &self.trucks
    }

    pub fn truck(&self, alias: &Alias) -> Option<&TruckState> {
        self.trucks.get(alias)
    }

    pub fn add_truck(&mut self, alias: Alias, at: MarkerId) -> Result<(), GridError> {
        self.map.check_node(at)?;
        if self.trucks.contains_key(&alias) {
            return Err(GridError::DuplicateTruck(alias));
        }
        self.trucks.insert(alias.clone(), TruckState::parked(alias, at));
        Ok(())
    }

    /// All trucks done (a world without trucks is trivially complete).
    pub fn is_complete(&self) -> bool {
        self.trucks.values().all(|t| t.phase == Phase::Done)
    }

    fn get_mut(&mut self, alias: &Alias) -> Result<&mut TruckState, GridError> {
        self.trucks
            .get_mut(alias)
            .ok_or_else(|| GridError::UnknownTruck(alias.clone()))
    }

    /// Hands a parked truck its full tour (starting at its position) and load.
    pub fn assign(&mut self, alias: &Alias, route: &[MarkerId], cargo: u32) -> Result<(), GridError> {
        self.map.route_length(route)?;
        let truck = self.trucks.get(alias).ok_or_else(|| GridError::UnknownTruck(alias.clone()))?;
        if truck.phase != Phase::Parked {
            return Err(illegal(truck, "accept a route"));
        }
        if route.first().is_some_and(|&s| s != truck.at) {
            return Err(GridError::RouteStart {
                truck: alias.clone(),
                at: truck.at,
            });
        }
        let t = self.get_mut(alias)?;
        t.route = route.iter().skip(1).copied().collect();
        t.phase = Phase::EnRoute;
        t.cargo = cargo;
        Ok(())
    }

    /// Stops an en-route truck at its node for `service_ticks` and unloads.
    pub fn begin_service(&mut self, alias: &Alias, unload: u32) -> Result<(), GridError> {
        let ticks = self.timing.service_ticks;
        let t = self.get_mut(alias)?;
        if t.phase != Phase::EnRoute || t.traversing.is_some() {
            return Err(illegal(t, "start service"));
        }
        t.phase = Phase::Serving;
        t.service_left = ticks;
        t.cargo = t.cargo.saturating_sub(unload);
        Ok(())
    }

    pub fn set_returning(&mut self, alias: &Alias) -> Result<(), GridError> {
        let t = self.get_mut(alias)?;
        if t.phase != Phase::EnRoute {
            return Err(illegal(t, "return"));
        }
        t.phase = Phase::Returning;
        Ok(())
    }

    pub fn finish(&mut self, alias: &Alias) -> Result<(), GridError> {
        let t = self.get_mut(alias)?;
        if t.phase != Phase::Returning || !t.route.is_empty() || t.traversing.is_some() {
            return Err(illegal(t, "finish"));
        }
        t.phase = Phase::Done;
        Ok(())
    }

    pub fn tick(&mut self) -> Vec<WorldEvent> {
        self.tick_with(&BTreeSet::new())
    }

    /// Advances every truck by one tick in ascending alias order. Trucks in
    /// `held` stay where they are if they would otherwise enter a new edge.
    pub fn tick_with(&mut self, held: &BTreeSet<Alias>) -> Vec<WorldEvent> {
        if self.is_complete() {
            return Vec::new();
        }
        self.tick += 1;
        let tick = self.tick;
        let edge_ticks = self.timing.edge_ticks.max(1);
        let mut events = Vec::new();
        for (alias, t) in self.trucks.iter_mut() {
            match t.phase {
                Phase::Serving => {
                    t.service_left = t.service_left.saturating_sub(1);
                    if t.service_left == 0 {
                        t.phase = Phase::EnRoute;
                        events.push(WorldEvent::ServiceComplete {
                            truck: alias.clone(),
                            node: t.at,
                            tick,
                        });
                    }
                }
                _ if t.moving() => {
                    if t.traversing.is_none() {
                        let Some(&next) = t.route.first() else {
                            continue;
                        };
                        if held.contains(alias) {
                            continue;
                        }
                        let edge = Edge::new(t.at, next);
                        t.traversing = Some(Traversal {
                            edge,
                            ticks_remaining: edge_ticks,
                        });
                        events.push(WorldEvent::EdgeEntered {
                            truck: alias.clone(),
                            edge,
                            tick,
                        });
                    }
                    if let Some(tr) = t.traversing.as_mut() {
                        tr.ticks_remaining -= 1;
                        if tr.ticks_remaining == 0 {
                            t.traversing = None;
                            t.at = t.route.remove(0);
                            events.push(WorldEvent::ArrivedAtNode {
                                truck: alias.clone(),
                                node: t.at,
                                tick,
                            });
                        }
                    }
                }
                _ => {}
            }
        }
        events
    }
}

fn illegal(t: &TruckState, action: &'static str) -> GridError {
    GridError::IllegalTransition {
        truck: t.truck.clone(),
        phase: t.phase,
        action,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alias(s: &str) -> Alias {
        Alias::new(s).unwrap()
    }

    fn m(ids: &[u16]) -> Vec<MarkerId> {
        ids.iter().copied().map(MarkerId).collect()
    }

    fn world() -> World {
        World::new(Arc::new(GridMap::default()), Timing::default())
    }

    #[test]
    fn single_edge_advance() {
        let mut w = world();
        w.add_truck(alias("T1"), MarkerId(0)).unwrap();
        w.assign(&alias("T1"), &m(&[0, 5, 10]), 0).unwrap();
        let ev = w.tick();
        let t = w.truck(&alias("T1")).unwrap();
        assert_eq!(t.at, MarkerId(5));
        let arrivals: Vec<_> = ev
            .iter()
            .filter(|e| matches!(e, WorldEvent::ArrivedAtNode { .. }))
            .collect();
        assert_eq!(
            arrivals,
            vec![&WorldEvent::ArrivedAtNode {
                truck: alias("T1"),
                node: MarkerId(5),
                tick: 1
            }]
        );
    }

    #[test]
    fn events_in_alias_order_regardless_of_insertion() {
        let mut w = world();
        w.add_truck(alias("T2"), MarkerId(20)).unwrap();
        w.add_truck(alias("T1"), MarkerId(0)).unwrap();
        w.assign(&alias("T2"), &m(&[20, 21]), 0).unwrap();
        w.assign(&alias("T1"), &m(&[0, 1]), 0).unwrap();
        let order: Vec<_> = w.tick().iter().map(|e| e.truck().to_string()).collect();
        assert_eq!(order, ["T1", "T1", "T2", "T2"]);
    }

    #[test]
    fn service_countdown() {
        let mut w = world();
        w.add_truck(alias("T1"), MarkerId(0)).unwrap();
        w.assign(&alias("T1"), &m(&[0, 5, 0]), 4).unwrap();
        w.tick();
        w.begin_service(&alias("T1"), 4).unwrap();
        assert!(w.tick().is_empty());
        assert_eq!(
            w.tick(),
            vec![WorldEvent::ServiceComplete {
                truck: alias("T1"),
                node: MarkerId(5),
                tick: 3
            }]
        );
        let t = w.truck(&alias("T1")).unwrap();
        assert_eq!((t.phase, t.cargo), (Phase::EnRoute, 0));
    }

    #[test]
    fn multi_tick_edges_and_holds() {
        let mut w = World::new(
            Arc::new(GridMap::default()),
            Timing {
                edge_ticks: 3,
                service_ticks: 2,
            },
        );
        let t1 = alias("T1");
        w.add_truck(t1.clone(), MarkerId(0)).unwrap();
        w.assign(&t1, &m(&[0, 5]), 0).unwrap();
        let held: BTreeSet<_> = [t1.clone()].into();
        assert!(w.tick_with(&held).is_empty());
        assert_eq!(w.truck(&t1).unwrap().at, MarkerId(0));
        w.tick();
        assert_eq!(w.truck(&t1).unwrap().traversing.unwrap().ticks_remaining, 2);
        // holding only gates entering a new edge
        w.tick_with(&held);
        let ev = w.tick_with(&held);
        assert!(matches!(ev[..], [WorldEvent::ArrivedAtNode { .. }]));
    }

    #[test]
    fn completed_world_is_noop() {
        let mut w = world();
        let t1 = alias("T1");
        w.add_truck(t1.clone(), MarkerId(0)).unwrap();
        w.assign(&t1, &m(&[0]), 0).unwrap();
        w.set_returning(&t1).unwrap();
        w.finish(&t1).unwrap();
        assert!(w.is_complete());
        assert!(w.tick().is_empty());
        assert_eq!(w.current_tick(), 0);
    }

    #[test]
    fn illegal_transitions_rejected() {
        let mut w = world();
        let t1 = alias("T1");
        w.add_truck(t1.clone(), MarkerId(0)).unwrap();
        assert!(w.begin_service(&t1, 0).is_err());
        assert!(w.finish(&t1).is_err());
        assert!(matches!(
            w.assign(&t1, &m(&[5, 0]), 0),
            Err(GridError::RouteStart { .. })
        ));
        assert!(matches!(
            w.assign(&t1, &m(&[0, 6]), 0),
            Err(GridError::InvalidRoute { .. })
        ));
        w.assign(&t1, &m(&[0, 5]), 0).unwrap();
        assert!(w.assign(&t1, &m(&[0, 5]), 0).is_err());
        assert!(w.finish(&t1).is_err());
        assert!(w.add_truck(t1, MarkerId(3)).is_err());
    }
}
