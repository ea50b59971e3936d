use super::{arrivals_respect_windows, Instance, Plan, SolverError};
use crate::gridworld::{MarkerId, PathTable};

/// Builds tours by insertion, then improves them by relocating single orders
/// between tours and 2-opt within each tour. Several deterministic
/// construction orders are tried and the cheapest result kept.
pub fn solve_heuristic(inst: &Instance) -> Result<Plan, SolverError> {
    inst.validate()?;
    let table = inst.map.path_table();
    let n = inst.orders.len();

    let mut by_demand: Vec<usize> = (0..n).collect();
    by_demand.sort_by_key(|&o| std::cmp::Reverse(inst.orders[o].demand));
    let constructions = [
        construct(inst, &table, None),
        construct(inst, &table, Some(&by_demand)),
        construct(inst, &table, Some(&(0..n).collect::<Vec<_>>())),
    ];
    let mut best: Option<(u64, Vec<Vec<usize>>)> = None;
    let mut failure = None;
    for c in constructions {
        let mut seqs = match c {
            Ok(seqs) => seqs,
            Err(e) => {
                failure.get_or_insert(e);
                continue;
            }
        };
        improve(inst, &table, &mut seqs);
        let cost = total_cost(inst, &table, &seqs).expect("constructed tours are connected");
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, seqs));
        }
    }
    match best {
        Some((_, seqs)) => Plan::from_sequences(inst, &table, &seqs),
        None => Err(failure.expect("some construction ran")),
    }
}

/// Cheapest feasible (delta, truck, position) for inserting `o`.
fn best_insertion(
    inst: &Instance,
    table: &PathTable,
    seqs: &[Vec<usize>],
    loads: &[u32],
    o: usize,
) -> Option<(u64, usize, usize)> {
    let demand = inst.orders[o].demand;
    let mut best: Option<(u64, usize, usize)> = None;
    for t in 0..seqs.len() {
        if !inst.allowed(t, o) || loads[t] + demand > inst.trucks[t].capacity {
            continue;
        }
        let depot = inst.trucks[t].depot;
        let Some(base) = tour_cost(inst, table, depot, &seqs[t]) else {
            continue;
        };
        for pos in 0..=seqs[t].len() {
            let mut cand = seqs[t].clone();
            cand.insert(pos, o);
            let Some(cost) = tour_cost(inst, table, depot, &cand) else {
                continue;
            };
            if !arrivals_respect_windows(inst, table, depot, &cand) {
                continue;
            }
            let delta = cost - base;
            if best.is_none_or(|(d, _, _)| delta < d) {
                best = Some((delta, t, pos));
            }
        }
    }
    best
}

/// With `order` given, inserts orders in that sequence; otherwise always
/// inserts whichever remaining order is cheapest to place.
fn construct(
    inst: &Instance,
    table: &PathTable,
    order: Option<&[usize]>,
) -> Result<Vec<Vec<usize>>, SolverError> {
    let m = inst.trucks.len();
    let mut seqs: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut loads = vec![0u32; m];
    let mut remaining: Vec<usize> = match order {
        Some(o) => o.to_vec(),
        None => (0..inst.orders.len()).collect(),
    };
    while !remaining.is_empty() {
        let candidates = if order.is_some() { 1 } else { remaining.len() };
        let mut pick: Option<(u64, usize, usize, usize)> = None;
        for (k, &o) in remaining.iter().take(candidates).enumerate() {
            match best_insertion(inst, table, &seqs, &loads, o) {
                Some((d, t, pos)) => {
                    if pick.is_none_or(|(bd, ..)| d < bd) {
                        pick = Some((d, k, t, pos));
                    }
                }
                None => {
                    return Err(SolverError::Infeasible(format!(
                        "order {} fits no truck tour",
                        inst.orders[o].order_id
                    )))
                }
            }
        }
        let (_, k, t, pos) = pick.expect("remaining is non-empty");
        let o = remaining.remove(k);
        seqs[t].insert(pos, o);
        loads[t] += inst.orders[o].demand;
    }
    Ok(seqs)
}

/// Relocates single orders wherever that shortens the plan, re-running
/// 2-opt on every tour, until nothing improves.
fn improve(inst: &Instance, table: &PathTable, seqs: &mut [Vec<usize>]) {
    for (t, seq) in seqs.iter_mut().enumerate() {
        two_opt(inst, table, inst.trucks[t].depot, seq);
    }
    let Some(mut best) = total_cost(inst, table, seqs) else {
        return;
    };
    loop {
        let mut moved = false;
        for from in 0..seqs.len() {
            let mut i = 0;
            while i < seqs[from].len() {
                let o = seqs[from].remove(i);
                let loads: Vec<u32> = seqs
                    .iter()
                    .map(|s| s.iter().map(|&x| inst.orders[x].demand).sum())
                    .collect();
                let depot = inst.trucks[from].depot;
                let here = tour_cost(inst, table, depot, &seqs[from])
                    .filter(|_| arrivals_respect_windows(inst, table, depot, &seqs[from]));
                let place = best_insertion(inst, table, seqs, &loads, o);
                let mut trial = seqs.to_vec();
                if let (Some(_), Some((_, t, pos))) = (here, place) {
                    trial[t].insert(pos, o);
                    match total_cost(inst, table, &trial) {
                        Some(c) if c < best => {
                            best = c;
                            seqs.clone_from_slice(&trial);
                            moved = true;
                            continue;
                        }
                        _ => {}
                    }
                }
                seqs[from].insert(i, o);
                i += 1;
            }
        }
        if !moved {
            break;
        }
        for (t, seq) in seqs.iter_mut().enumerate() {
            two_opt(inst, table, inst.trucks[t].depot, seq);
        }
        best = total_cost(inst, table, seqs).expect("tours stay connected");
    }
}

fn total_cost(inst: &Instance, table: &PathTable, seqs: &[Vec<usize>]) -> Option<u64> {
    inst.trucks
        .iter()
        .zip(seqs)
        .map(|(t, s)| tour_cost(inst, table, t.depot, s))
        .sum()
}

fn tour_cost(inst: &Instance, table: &PathTable, depot: MarkerId, seq: &[usize]) -> Option<u64> {
    let mut prev = depot;
    let mut total = 0u64;
    for &o in seq {
        let d = inst.orders[o].destination;
        total += u64::from(table.distance(prev, d)?);
        prev = d;
    }
    total += u64::from(table.distance(prev, depot)?);
    Some(total)
}

fn two_opt(inst: &Instance, table: &PathTable, depot: MarkerId, seq: &mut [usize]) {
    let Some(mut best) = tour_cost(inst, table, depot, seq) else {
        return;
    };
    let n = seq.len();
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n {
            for j in (i + 1)..n {
                seq[i..=j].reverse();
                let ok = arrivals_respect_windows(inst, table, depot, seq);
                match tour_cost(inst, table, depot, seq) {
                    Some(c) if ok && c < best => {
                        best = c;
                        improved = true;
                    }
                    _ => seq[i..=j].reverse(),
                }
            }
        }
    }
}
