use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Instance, SolverError};
use crate::agents::Stop;
use crate::alias::Alias;
use crate::gridworld::{MarkerId, PathTable};

/// One truck's closed tour.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tour {
    pub truck: Alias,
    pub depot: MarkerId,
    pub route: Vec<MarkerId>,
    pub stops: Vec<Stop>,
    pub load: u32,
    pub blocks: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub tours: BTreeMap<Alias, Tour>,
    pub total_blocks: u32,
}

impl Plan {
    /// Expands per-truck order sequences into routes via tie-broken
    /// shortest paths. `seqs` is indexed like `inst.trucks`.
    pub(crate) fn from_sequences(
        inst: &Instance,
        table: &PathTable,
        seqs: &[Vec<usize>],
    ) -> Result<Plan, SolverError> {
        let mut tours = BTreeMap::new();
        let mut total = 0;
        for (t, seq) in inst.trucks.iter().zip(seqs) {
            let route = expand(inst, table, t.depot, seq)?;
            let blocks = (route.len() - 1) as u32;
            total += blocks;
            tours.insert(
                t.alias.clone(),
                Tour {
                    truck: t.alias.clone(),
                    depot: t.depot,
                    route,
                    stops: seq
                        .iter()
                        .map(|&o| Stop {
                            marker: inst.orders[o].destination,
                            order_id: inst.orders[o].order_id.clone(),
                            demand: inst.orders[o].demand,
                        })
                        .collect(),
                    load: seq.iter().map(|&o| inst.orders[o].demand).sum(),
                    blocks,
                },
            );
        }
        Ok(Plan {
            tours,
            total_blocks: total,
        })
    }

    pub fn tour(&self, truck: &Alias) -> Option<&Tour> {
        self.tours.get(truck)
    }

    /// Checks every structural rule a plan must satisfy for `inst`.
    pub fn validate(&self, inst: &Instance) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        let mut total = 0;
        for slot in &inst.trucks {
            let tour = self
                .tours
                .get(&slot.alias)
                .ok_or_else(|| format!("no tour for {}", slot.alias))?;
            if tour.route.first() != Some(&slot.depot) || tour.route.last() != Some(&slot.depot) {
                return Err(format!("tour of {} is not closed at its depot", slot.alias));
            }
            let len = inst
                .map
                .route_length(&tour.route)
                .map_err(|e| format!("tour of {}: {e}", slot.alias))?;
            if len != tour.blocks {
                return Err(format!("tour of {} miscounts its blocks", slot.alias));
            }
            total += len;
            let mut load = 0;
            let mut cursor = 0;
            for stop in &tour.stops {
                let order = inst
                    .orders
                    .iter()
                    .find(|o| o.order_id == stop.order_id)
                    .ok_or_else(|| format!("unknown order {}", stop.order_id))?;
                if order.destination != stop.marker {
                    return Err(format!("stop for {} at wrong node", stop.order_id));
                }
                if inst.mode == super::Mode::Baseline && order.carrier != slot.carrier {
                    return Err(format!("{} serves a foreign order in baseline", slot.alias));
                }
                if !seen.insert(stop.order_id.clone()) {
                    return Err(format!("order {} served twice", stop.order_id));
                }
                load += order.demand;
                match tour.route[cursor..].iter().position(|&m| m == stop.marker) {
                    Some(p) => cursor += p,
                    None => return Err(format!("stop {} off the route", stop.order_id)),
                }
            }
            if load > slot.capacity || load != tour.load {
                return Err(format!("tour of {} overloads or misreports load", slot.alias));
            }
        }
        if self.tours.len() != inst.trucks.len() {
            return Err("plan has tours for unknown trucks".into());
        }
        if seen.len() != inst.orders.len() {
            return Err("some orders were not served".into());
        }
        if total != self.total_blocks {
            return Err("total_blocks is not the sum of tours".into());
        }
        Ok(())
    }
}

pub(crate) fn expand(
    inst: &Instance,
    table: &PathTable,
    depot: MarkerId,
    seq: &[usize],
) -> Result<Vec<MarkerId>, SolverError> {
    let mut route = vec![depot];
    let mut prev = depot;
    let targets = seq
        .iter()
        .map(|&o| inst.orders[o].destination)
        .chain(std::iter::once(depot));
    for next in targets {
        let leg = table.path(prev, next).ok_or(crate::gridworld::GridError::NoPath {
            from: prev,
            to: next,
        })?;
        route.extend_from_slice(&leg[1..]);
        prev = next;
    }
    Ok(route)
}
