use std::cmp::Ordering;

use super::plan::expand;
use super::{arrivals_respect_windows, Instance, Plan, SolverError};
use crate::gridworld::{MarkerId, PathTable};

/// Enumeration budget for [`solve_exact`].
pub const MAX_EXACT_ORDERS: usize = 10;
pub const MAX_EXACT_TRUCKS: usize = 4;

#[derive(Debug, Clone)]
struct TourSol {
    blocks: u32,
    seq: Vec<usize>,
    route: Vec<MarkerId>,
}

impl TourSol {
    fn key_cmp(&self, other: &TourSol) -> Ordering {
        self.blocks
            .cmp(&other.blocks)
            .then_with(|| self.route.cmp(&other.route))
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

#[derive(Debug, Clone)]
struct Entry {
    total: u32,
    /// Order subset per truck, from the current truck to the last.
    masks: Vec<u32>,
    tours: Vec<TourSol>,
}

impl Entry {
    fn cmp(&self, other: &Entry) -> Ordering {
        self.total.cmp(&other.total).then_with(|| {
            for (a, b) in self.tours.iter().zip(&other.tours) {
                let c = a.route.cmp(&b.route).then_with(|| a.seq.cmp(&b.seq));
                if c != Ordering::Equal {
                    return c;
                }
            }
            Ordering::Equal
        })
    }
}

struct Search<'a> {
    inst: &'a Instance,
    table: PathTable,
    demand: Vec<u32>,
    allowed: Vec<u32>,
    tsp: Vec<Vec<Option<Option<TourSol>>>>,
    best: Vec<Vec<Option<Option<Entry>>>>,
}

/// Minimum total blocks over every capacity-feasible assignment of orders
/// to trucks and every stop ordering. Ties go to the lexicographically
/// smallest sequence of tours in truck-alias order.
pub fn solve_exact(inst: &Instance) -> Result<Plan, SolverError> {
    inst.validate()?;
    let n = inst.orders.len();
    let m = inst.trucks.len();
    if n > MAX_EXACT_ORDERS || m > MAX_EXACT_TRUCKS {
        return Err(SolverError::TooLarge {
            orders: n,
            trucks: m,
        });
    }
    let table = inst.map.path_table();
    if m == 0 {
        return Plan::from_sequences(inst, &table, &[]);
    }
    let full = (1u32 << n) - 1;
    let demand = (0..=full)
        .map(|mask| {
            (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| inst.orders[i].demand)
                .sum()
        })
        .collect();
    let allowed = (0..m)
        .map(|t| {
            (0..n)
                .filter(|&o| inst.allowed(t, o))
                .fold(0u32, |acc, o| acc | (1 << o))
        })
        .collect();
    let mut search = Search {
        inst,
        table,
        demand,
        allowed,
        tsp: vec![vec![None; 1 << n]; m],
        best: vec![vec![None; 1 << n]; m],
    };
    let entry = search.best_from(0, full).ok_or_else(|| {
        SolverError::Infeasible("no assignment satisfies capacity, reachability and windows".into())
    })?;
    let seqs: Vec<Vec<usize>> = entry.tours.iter().map(|t| t.seq.clone()).collect();
    debug_assert_eq!(entry.masks.len(), m);
    Plan::from_sequences(inst, &search.table, &seqs)
}

impl Search<'_> {
    fn best_from(&mut self, t: usize, mask: u32) -> Option<Entry> {
        if let Some(cached) = &self.best[t][mask as usize] {
            return cached.clone();
        }
        let m = self.inst.trucks.len();
        let cap = self.inst.trucks[t].capacity;
        let result = if t + 1 == m {
            if mask & !self.allowed[t] != 0 || self.demand[mask as usize] > cap {
                None
            } else {
                self.tour(t, mask).map(|tour| Entry {
                    total: tour.blocks,
                    masks: vec![mask],
                    tours: vec![tour],
                })
            }
        } else {
            let sup = mask & self.allowed[t];
            let mut best: Option<Entry> = None;
            let mut s = sup;
            loop {
                if self.demand[s as usize] <= cap {
                    if let Some(tour) = self.tour(t, s) {
                        if let Some(rest) = self.best_from(t + 1, mask ^ s) {
                            let mut masks = Vec::with_capacity(m - t);
                            masks.push(s);
                            masks.extend_from_slice(&rest.masks);
                            let mut tours = Vec::with_capacity(m - t);
                            tours.push(tour);
                            tours.extend(rest.tours);
                            let cand = Entry {
                                total: tours[0].blocks + rest.total,
                                masks,
                                tours,
                            };
                            if best.as_ref().is_none_or(|b| cand.cmp(b) == Ordering::Less) {
                                best = Some(cand);
                            }
                        }
                    }
                }
                if s == 0 {
                    break;
                }
                s = (s - 1) & sup;
            }
            best
        };
        self.best[t][mask as usize] = Some(result.clone());
        result
    }

    fn tour(&mut self, t: usize, mask: u32) -> Option<TourSol> {
        if let Some(cached) = &self.tsp[t][mask as usize] {
            return cached.clone();
        }
        let items: Vec<usize> = (0..self.inst.orders.len())
            .filter(|i| mask & (1 << i) != 0)
            .collect();
        let depot = self.inst.trucks[t].depot;
        let mut best = None;
        let mut seq = Vec::with_capacity(items.len());
        let mut used = vec![false; items.len()];
        self.permute(depot, depot, 0, &items, &mut used, &mut seq, &mut best);
        self.tsp[t][mask as usize] = Some(best.clone());
        best
    }

    #[allow(clippy::too_many_arguments)]
    fn permute(
        &self,
        depot: MarkerId,
        prev: MarkerId,
        partial: u32,
        items: &[usize],
        used: &mut [bool],
        seq: &mut Vec<usize>,
        best: &mut Option<TourSol>,
    ) {
        if seq.len() == items.len() {
            let Some(back) = self.table.distance(prev, depot) else {
                return;
            };
            let blocks = partial + back;
            if best.as_ref().is_some_and(|b| blocks > b.blocks) {
                return;
            }
            let Ok(route) = expand(self.inst, &self.table, depot, seq) else {
                return;
            };
            let cand = TourSol {
                blocks,
                seq: seq.clone(),
                route,
            };
            if best.as_ref().is_none_or(|b| cand.key_cmp(b) == Ordering::Less) {
                *best = Some(cand);
            }
            return;
        }
        for i in 0..items.len() {
            if used[i] {
                continue;
            }
            let dest = self.inst.orders[items[i]].destination;
            let Some(step) = self.table.distance(prev, dest) else {
                continue;
            };
            let next = partial + step;
            // the way back is at least the direct distance home
            let bound = next + self.table.distance(dest, depot).unwrap_or(0);
            if best.as_ref().is_some_and(|b| bound > b.blocks) {
                continue;
            }
            seq.push(items[i]);
            if arrivals_respect_windows(self.inst, &self.table, depot, seq) {
                used[i] = true;
                self.permute(depot, dest, next, items, used, seq, best);
                used[i] = false;
            }
            seq.pop();
        }
    }
}
