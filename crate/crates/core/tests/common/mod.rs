//! Shared fixtures and independent oracles for the integration suites.
#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twinlog::agents::{OrderId, TransportOrder};
use twinlog::gridworld::{GridMap, MarkerId};
use twinlog::scenario::{CustomerSpec, DepotSpec, GridSpec, ScenarioFile, TruckSpec};
use twinlog::solver::{Instance, Mode, TruckSlot};
use twinlog::twin::{EventFrame, FrameBody};
use twinlog::messaging::Envelope;
use twinlog::Alias;

pub fn alias(s: &str) -> Alias {
    Alias::new(s).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Column-major 5-wide grid distance, computed without the library's map.
pub fn manhattan(a: MarkerId, b: MarkerId) -> u32 {
    let (ax, ay) = (i32::from(a.0) / 5, i32::from(a.0) % 5);
    let (bx, by) = (i32::from(b.0) / 5, i32::from(b.0) % 5);
    ((ax - bx).abs() + (ay - by).abs()) as u32
}

/// Random instance on the full 5x5 grid: one truck per carrier.
pub fn random_instance(rng: &mut impl Rng, max_trucks: usize, max_orders: usize) -> Instance {
    let mut nodes: Vec<u16> = (0..25).collect();
    nodes.shuffle(rng);
    let trucks_n = rng.gen_range(1..=max_trucks);
    let orders_n = rng.gen_range(0..=max_orders);
    let trucks: Vec<TruckSlot> = (0..trucks_n)
        .map(|i| TruckSlot {
            alias: alias(&format!("T{}", i + 1)),
            carrier: alias(&format!("D{}", i + 1)),
            depot: MarkerId(nodes[i]),
            capacity: rng.gen_range(2..=8),
        })
        .collect();
    let orders = (0..orders_n)
        .map(|i| {
            let carrier = rng.gen_range(0..trucks_n);
            TransportOrder {
                order_id: OrderId::new(format!("o{i}")),
                carrier: alias(&format!("D{}", carrier + 1)),
                customer: alias(&format!("C{}", i + 1)),
                destination: MarkerId(nodes[trucks_n + i]),
                demand: rng.gen_range(1..=3),
                time_window: None,
            }
        })
        .collect();
    Instance::new(Arc::new(GridMap::full(5, 5)), trucks, orders, Mode::Collaborative)
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

fn tour_cost(depot: MarkerId, stops: &[MarkerId]) -> u32 {
    let mut prev = depot;
    let mut cost = 0;
    for &s in stops {
        cost += manhattan(prev, s);
        prev = s;
    }
    cost + manhattan(prev, depot)
}

/// Brute force over every assignment of orders to trucks and every visiting
/// order. `None` when no capacity-feasible assignment exists.
pub fn brute_force_optimum(inst: &Instance) -> Option<u32> {
    let t = inst.trucks.len();
    let n = inst.orders.len();
    let mut best: Option<u32> = None;
    let mut assign = vec![0usize; n];
    loop {
        let mut feasible = true;
        let mut total = 0;
        for (ti, truck) in inst.trucks.iter().enumerate() {
            let mine: Vec<usize> = (0..n).filter(|&o| assign[o] == ti).collect();
            let load: u32 = mine.iter().map(|&o| inst.orders[o].demand).sum();
            let foreign = mine.iter().any(|&o| inst.orders[o].carrier != truck.carrier);
            if load > truck.capacity || (inst.mode == Mode::Baseline && foreign) {
                feasible = false;
                break;
            }
            total += permutations(&mine)
                .iter()
                .map(|p| {
                    let stops: Vec<MarkerId> =
                        p.iter().map(|&o| inst.orders[o].destination).collect();
                    tour_cost(truck.depot, &stops)
                })
                .min()
                .unwrap();
        }
        if feasible {
            best = Some(best.map_or(total, |b| b.min(total)));
        }
        // next assignment in base t
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            assign[i] += 1;
            if assign[i] < t {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
}

/// Random showcase-like scenario with two single-track segments.
pub fn random_scenario(rng: &mut impl Rng, max_trucks_per_depot: usize) -> ScenarioFile {
    let depots_n = rng.gen_range(2..=4);
    let pool: Vec<u16> = (0..25).collect();
    scenario_with(rng, depots_n, max_trucks_per_depot, &pool)
}

/// Four loaded corner depots serving customers on the segments' crossing
/// and ends, plus the edge midpoints beyond them, so routes cut through the
/// centre from all sides and claims collide.
pub fn stress_scenario(rng: &mut impl Rng) -> ScenarioFile {
    scenario_with(rng, 4, 3, &[12, 7, 11, 13, 17, 2, 10, 14, 22])
}

fn scenario_with(
    rng: &mut impl Rng,
    depots_n: usize,
    max_trucks_per_depot: usize,
    pool: &[u16],
) -> ScenarioFile {
    let depot_nodes = [0u16, 20, 24, 4];
    let mut truck_no = 0;
    let depots: Vec<DepotSpec> = (0..depots_n)
        .map(|d| DepotSpec {
            label: alias(&format!("D{}", d + 1)),
            marker: MarkerId(depot_nodes[d]),
            trucks: (0..rng.gen_range(1..=max_trucks_per_depot))
                .map(|_| {
                    truck_no += 1;
                    TruckSpec {
                        alias: alias(&format!("T{truck_no}")),
                        // even capacities so 1- and 2-pallet orders always pack
                        capacity: 2 * rng.gen_range(2..=4),
                    }
                })
                .collect(),
        })
        .collect();
    let mut free: Vec<u16> = pool
        .iter()
        .copied()
        .filter(|n| !depot_nodes[..depots_n].contains(n))
        .collect();
    free.shuffle(rng);
    // keep every carrier able to serve its own customers alone
    let mut left: Vec<u32> = depots
        .iter()
        .map(|d| d.trucks.iter().map(|t| t.capacity).sum())
        .collect();
    let mut customers = Vec::new();
    for &node in free.iter().take(rng.gen_range(3..=9)) {
        let demand = rng.gen_range(1..=2);
        let d = rng.gen_range(0..depots_n);
        if demand > left[d] {
            continue;
        }
        left[d] -= demand;
        customers.push(CustomerSpec {
            label: alias(&format!("C{}", customers.len() + 1)),
            marker: MarkerId(node),
            demand,
            carrier: depots[d].label.clone(),
            time_window: None,
        });
    }
    let m = MarkerId;
    ScenarioFile {
        grid: GridSpec {
            width: 5,
            height: 5,
            removed_edges: vec![],
            // the centre column and the centre row, crossing at 12
            single_track: vec![
                vec![[m(11), m(12)], [m(12), m(13)]],
                vec![[m(7), m(12)], [m(12), m(17)]],
            ],
        },
        depots,
        customers,
        timing: twinlog::gridworld::Timing {
            edge_ticks: rng.gen_range(1..=3),
            service_ticks: rng.gen_range(1..=3),
        },
    }
}

pub fn messages(frames: &[EventFrame]) -> Vec<Envelope> {
    frames
        .iter()
        .filter_map(|f| match &f.body {
            FrameBody::MessageSent(e) => Some(e.clone()),
            _ => None,
        })
        .collect()
}
