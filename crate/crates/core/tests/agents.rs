//! Agent behaviour over an in-process bus with scripted peers.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};

use common::{alias, messages};
use twinlog::agents::conformance::{conforms, project_truck};
use twinlog::agents::{
    AgentError, AgentKind, CustomerAgent, OrderId, Stop, TransportTask, TruckAgent, TruckNote,
    CONFIRM_ATTEMPTS,
};
use twinlog::gridworld::{GridMap, MarkerId, NodeLabel, Phase, SegmentId, Timing, World, WorldEvent};
use twinlog::messaging::{
    ArrivalNotice, Bus, ClockMode, Envelope, Handler, IdSource, LocalTransport, MessageLog,
    MessagingError, MsgType, Payload, Performative, Reply, Transport,
};
use twinlog::scenario::{showcase, Scenario};
use twinlog::twin::{new_run, run_scenario, RunConfig, RunError, TransportMode};
use twinlog::Alias;

/// Confirms everything.
struct Ack;

impl Handler for Ack {
    fn handle(&mut self, _: &Envelope, _: Payload, _: &Bus) -> Reply {
        Reply::ack()
    }
}

/// Refuses everything.
struct Grumpy;

impl Handler for Grumpy {
    fn handle(&mut self, _: &Envelope, _: Payload, _: &Bus) -> Reply {
        Reply::Refuse("not today".into())
    }
}

/// Drops the first `drops` notices of arrival on the floor.
struct Flaky {
    inner: LocalTransport,
    drops: AtomicU32,
}

impl Transport for Flaky {
    fn deliver(&self, request: &Envelope, bus: &Bus) -> Result<Envelope, MessagingError> {
        if request.msg_type == MsgType::NoticeOfArrival
            && self.drops.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |d| d.checked_sub(1)).is_ok()
        {
            return Err(MessagingError::Timeout(request.recipient.clone()));
        }
        self.inner.deliver(request, bus)
    }
}

struct Harness {
    bus: Bus,
    log: Arc<MessageLog>,
    trucks: BTreeMap<Alias, Arc<Mutex<TruckAgent>>>,
    world: World,
}

/// Full 5x5 grid, depot D1 at 0, customer C1 at 2, optional segment over
/// 11-12-13, plus one truck per `(alias, home)`.
fn harness(
    customer: Box<dyn Handler>,
    drops: u32,
    segment: bool,
    trucks: &[(&str, u16)],
) -> Harness {
    let mut map = GridMap::full(5, 5);
    map.label(MarkerId(0), NodeLabel::Depot("D1".into())).unwrap();
    map.label(MarkerId(2), NodeLabel::Customer("C1".into())).unwrap();
    if segment {
        let edges = vec![map.edge(MarkerId(11), MarkerId(12)).unwrap(), map.edge(MarkerId(12), MarkerId(13)).unwrap()];
        map.add_segment(SegmentId::new("S1"), edges).unwrap();
    }
    let map = Arc::new(map);
    let flaky = Arc::new(Flaky { inner: LocalTransport::new(), drops: AtomicU32::new(drops) });
    let mut directory = BTreeMap::from([
        (alias("D1"), AgentKind::Depot),
        (alias("C1"), AgentKind::Customer),
        (alias("orchestrator"), AgentKind::Orchestrator),
    ]);
    flaky.inner.register(alias("D1"), Arc::new(Mutex::new(Ack)));
    flaky.inner.register(alias("orchestrator"), Arc::new(Mutex::new(Ack)));
    flaky.inner.register(alias("C1"), Arc::new(Mutex::new(BoxedHandler(customer))));
    let peers: Vec<Alias> = trucks.iter().map(|(a, _)| alias(a)).collect();
    let mut world = World::new(map.clone(), Timing::default());
    let mut agents = BTreeMap::new();
    for (a, home) in trucks {
        let agent = Arc::new(Mutex::new(TruckAgent::new(
            alias(a),
            MarkerId(*home),
            alias("D1"),
            alias("orchestrator"),
            map.clone(),
            peers.clone(),
        )));
        flaky.inner.register(alias(a), agent.clone());
        directory.insert(alias(a), AgentKind::Truck);
        world.add_truck(alias(a), MarkerId(*home)).unwrap();
        agents.insert(alias(a), agent);
    }
    let log = Arc::new(MessageLog::new());
    let bus = Bus::new(flaky, log.clone(), ClockMode::Simulated, Arc::new(IdSource::new("m")), Arc::new(directory));
    Harness { bus, log, trucks: agents, world }
}

struct BoxedHandler(Box<dyn Handler>);

impl Handler for BoxedHandler {
    fn handle(&mut self, r: &Envelope, p: Payload, b: &Bus) -> Reply {
        self.0.handle(r, p, b)
    }
}

fn m(ids: &[u16]) -> Vec<MarkerId> {
    ids.iter().copied().map(MarkerId).collect()
}

fn task(truck: &str, route: &[u16], stops: &[(u16, &str)]) -> TransportTask {
    TransportTask {
        task_id: format!("task-{truck}"),
        truck: alias(truck),
        route: m(route),
        stops: stops
            .iter()
            .map(|&(node, id)| Stop { marker: MarkerId(node), order_id: OrderId::new(id), demand: 1 })
            .collect(),
        load: stops.len() as u32,
    }
}

impl Harness {
    fn hand_out(&self, t: TransportTask) -> Envelope {
        let to = t.truck.clone();
        self.bus.send(&alias("D1"), &to, Payload::TransportTask(t), 0).unwrap()
    }

    /// The engine's tick loop, minus the twin bookkeeping.
    fn drive(&mut self, max_ticks: u64) -> (Vec<WorldEvent>, Vec<TruckNote>) {
        let mut all_events = Vec::new();
        let mut notes = Vec::new();
        while !self.world.is_complete() {
            assert!(self.world.current_tick() < max_ticks, "run did not finish");
            let mut held = BTreeSet::new();
            for (a, t) in &self.trucks {
                if t.lock().unwrap().pre_move(&mut self.world, &self.bus, &mut notes).unwrap() {
                    held.insert(a.clone());
                }
            }
            if self.world.is_complete() {
                break;
            }
            let events = self.world.tick_with(&held);
            for t in self.trucks.values() {
                t.lock().unwrap().after_tick(&mut self.world, &self.bus, &events, &mut notes).unwrap();
            }
            all_events.extend(events);
        }
        (all_events, notes)
    }

    fn truck(&self, a: &str) -> std::sync::MutexGuard<'_, TruckAgent> {
        self.trucks[&alias(a)].lock().unwrap()
    }
}

#[test]
fn customer_signs_once_and_checks_the_node() {
    let h = harness(Box::new(CustomerAgent::new(alias("C1"), MarkerId(2), vec![OrderId::new("o1")])), 0, false, &[]);
    let notice = |order: &str, node: u16| {
        Payload::NoticeOfArrival(ArrivalNotice {
            truck: alias("T1"),
            customer: alias("C1"),
            order_id: OrderId::new(order),
            node: MarkerId(node),
        })
    };
    let first = h.bus.send(&alias("T1"), &alias("C1"), notice("o1", 2), 4).unwrap();
    assert_eq!(first.performative, Performative::Confirm);
    assert_eq!(first.msg_type, MsgType::ConfirmationOfReceipt);
    assert_eq!(first.correlation_id.as_ref(), Some(&h.log.entries()[0].msg_id));

    let again = h.bus.send(&alias("T1"), &alias("C1"), notice("o1", 2), 9).unwrap();
    assert_eq!(again.payload, first.payload, "duplicate notice must return the original receipt");

    let wrong_node = h.bus.send(&alias("T1"), &alias("C1"), notice("o1", 3), 9).unwrap();
    assert_eq!(wrong_node.performative, Performative::Refuse);
    let unknown = h.bus.send(&alias("T1"), &alias("C1"), notice("o7", 2), 9).unwrap();
    assert_eq!(unknown.performative, Performative::Refuse);
}

#[test]
fn depots_cannot_message_customers() {
    let h = harness(Box::new(Ack), 0, false, &[]);
    let reply = h
        .bus
        .send(&alias("D1"), &alias("C1"), Payload::NoticeOfArrival(ArrivalNotice {
            truck: alias("T1"),
            customer: alias("C1"),
            order_id: OrderId::new("o1"),
            node: MarkerId(2),
        }), 0)
        .unwrap();
    assert_eq!(reply.performative, Performative::Refuse);
}

#[test]
fn refused_stop_is_written_off_and_the_tour_continues() {
    let mut h = harness(Box::new(Grumpy), 0, false, &[("T1", 0)]);
    assert_eq!(h.hand_out(task("T1", &[0, 1, 2, 1, 0], &[(2, "o1")])).performative, Performative::Confirm);
    let (_, notes) = h.drive(50);
    let t = h.truck("T1");
    assert!(t.is_finished());
    assert_eq!(t.failed(), &[OrderId::new("o1")]);
    assert!(t.delivered().is_empty());
    assert!(notes.iter().any(|n| matches!(n, TruckNote::StopFailed { order_id, .. } if order_id.as_str() == "o1")));
    let log = h.log.entries();
    // a refusal is an answer: no retry
    let notices = log.iter().filter(|e| e.msg_type == MsgType::NoticeOfArrival && e.performative == Performative::Request).count();
    assert_eq!(notices, 1);
    let done = log.iter().find(|e| e.msg_type == MsgType::FulfilmentComplete).unwrap();
    match done.payload().unwrap() {
        Payload::FulfilmentComplete(f) => {
            assert_eq!(f.failed, vec![OrderId::new("o1")]);
            assert_eq!(f.blocks, 4);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(h.world.truck(&alias("T1")).unwrap().phase, Phase::Done);
}

#[test]
fn lost_notices_are_retried_up_to_the_limit() {
    let expected = || Box::new(CustomerAgent::new(alias("C1"), MarkerId(2), vec![OrderId::new("o1")]));
    let mut h = harness(expected(), CONFIRM_ATTEMPTS - 1, false, &[("T1", 0)]);
    h.hand_out(task("T1", &[0, 1, 2, 1, 0], &[(2, "o1")]));
    h.drive(50);
    assert_eq!(h.truck("T1").delivered(), &[OrderId::new("o1")]);

    let mut h = harness(expected(), CONFIRM_ATTEMPTS, false, &[("T1", 0)]);
    h.hand_out(task("T1", &[0, 1, 2, 1, 0], &[(2, "o1")]));
    let (_, notes) = h.drive(50);
    assert_eq!(h.truck("T1").failed(), &[OrderId::new("o1")]);
    let reason = notes
        .iter()
        .find_map(|n| match n {
            TruckNote::StopFailed { reason, .. } => Some(reason.clone()),
            _ => None,
        })
        .unwrap();
    assert!(reason.contains("3 attempts"), "{reason}");
}

#[test]
fn zero_stop_task_reports_home_without_moving() {
    let mut h = harness(Box::new(Ack), 0, false, &[("T1", 0)]);
    h.hand_out(task("T1", &[0], &[]));
    let (events, _) = h.drive(5);
    assert!(events.is_empty(), "{events:?}");
    let types: Vec<MsgType> = h
        .log
        .entries()
        .iter()
        .filter(|e| e.performative == Performative::Request)
        .map(|e| e.msg_type)
        .collect();
    assert_eq!(types, [MsgType::TransportTask, MsgType::DepotArrival, MsgType::FulfilmentComplete]);
    let seq = project_truck(&h.log.entries(), &alias("T1"));
    assert!(conforms(&seq, 0));
}

#[test]
fn malformed_or_foreign_tasks_are_refused() {
    let h = harness(Box::new(Ack), 0, false, &[("T1", 0)]);
    // not closed
    assert_eq!(h.hand_out(task("T1", &[0, 1, 2], &[])).performative, Performative::Refuse);
    // not a road
    assert_eq!(h.hand_out(task("T1", &[0, 6, 0], &[])).performative, Performative::Refuse);
    // wrong sender
    let r = h.bus.send(&alias("orchestrator"), &alias("T1"), Payload::TransportTask(task("T1", &[0], &[])), 0).unwrap();
    assert_eq!(r.performative, Performative::Refuse);
}

#[test]
fn contested_segment_goes_to_the_lower_alias_and_the_other_waits() {
    let mut h = harness(Box::new(Ack), 0, true, &[("T1", 10), ("T2", 14)]);
    h.hand_out(task("T1", &[10, 11, 12, 13, 12, 11, 10], &[]));
    h.hand_out(task("T2", &[14, 13, 12, 11, 12, 13, 14], &[]));
    let (events, _) = h.drive(60);
    let entered = |truck: &str, a: u16, b: u16| {
        events
            .iter()
            .find_map(|e| match e {
                WorldEvent::EdgeEntered { truck: t, edge, tick }
                    if t.as_str() == truck && edge.touches(MarkerId(a)) && edge.touches(MarkerId(b)) =>
                {
                    Some(*tick)
                }
                _ => None,
            })
            .unwrap()
    };
    // both reach the segment mouth after one tick; T1 wins
    assert_eq!(entered("T1", 11, 12), 2);
    let t1_out = events
        .iter()
        .filter_map(|e| match e {
            WorldEvent::ArrivedAtNode { truck, node, tick } if truck.as_str() == "T1" && node.0 == 11 => Some(*tick),
            _ => None,
        })
        .next_back()
        .unwrap();
    assert!(entered("T2", 13, 12) > t1_out, "T2 entered before T1 left");
    let log = h.log.entries();
    let refused = log
        .iter()
        .filter(|e| e.msg_type == MsgType::SegmentClaim && e.performative == Performative::Refuse)
        .count();
    assert!(refused >= 1);
    for truck in ["T1", "T2"] {
        assert!(conforms(&project_truck(&log, &alias(truck)), 0));
    }
    assert!(h.truck("T1").held_segment().is_none() && h.truck("T2").held_segment().is_none());
}

#[test]
fn free_segment_is_granted_immediately() {
    let mut h = harness(Box::new(Ack), 0, true, &[("T1", 10), ("T2", 0)]);
    h.hand_out(task("T1", &[10, 11, 12, 11, 10], &[]));
    h.hand_out(task("T2", &[0], &[]));
    let (events, _) = h.drive(30);
    let log = h.log.entries();
    assert!(log.iter().any(|e| e.msg_type == MsgType::SegmentClaim && e.performative == Performative::Confirm));
    assert!(!log.iter().any(|e| e.performative == Performative::Refuse));
    // no waiting: 4 edges in 4 ticks
    let last = events.iter().rfind(|e| matches!(e, WorldEvent::ArrivedAtNode { .. })).unwrap();
    assert!(matches!(last, WorldEvent::ArrivedAtNode { tick: 4, .. }));
}

fn tiny_scenario(customers: &str, trucks: &str) -> Scenario {
    Scenario::from_json(&format!(
        r#"{{"depots":[{{"label":"D1","marker":0,"trucks":[{trucks}]}}],"customers":[{customers}]}}"#
    ))
    .unwrap()
}

#[test]
fn single_customer_next_door_is_two_blocks_with_no_saving() {
    let sc = tiny_scenario(r#"{"label":"C1","marker":1,"demand":1,"carrier":"D1"}"#, r#"{"alias":"T1","capacity":2}"#);
    let art = run_scenario(&sc, &RunConfig::default(), &TransportMode::Local, new_run(&sc, 0));
    let report = art.result.unwrap();
    assert_eq!((report.pre_total, report.post_total), (2, 2));
    let rec = art.shared.record();
    assert_eq!(rec.plan_post.unwrap().tours[&alias("T1")].route, m(&[0, 1, 0]));
    let msgs = messages(&art.shared.frames.all());
    assert!(msgs.iter().any(|e| e.msg_type == MsgType::DistanceReport));
}

#[test]
fn overcommitted_fleet_fails_as_infeasible() {
    let sc = tiny_scenario(
        r#"{"label":"C1","marker":1,"demand":20,"carrier":"D1"},
           {"label":"C2","marker":2,"demand":20,"carrier":"D1"},
           {"label":"C3","marker":3,"demand":10,"carrier":"D1"}"#,
        r#"{"alias":"T1","capacity":20},{"alias":"T2","capacity":20}"#,
    );
    let art = run_scenario(&sc, &RunConfig::default(), &TransportMode::Local, new_run(&sc, 0));
    assert!(matches!(art.result, Err(RunError::Agent(AgentError::SolverInfeasible(_)))), "{:?}", art.result.err());
}

#[test]
fn showcase_every_customer_signs() {
    let sc = showcase();
    let art = run_scenario(&sc, &RunConfig::default(), &TransportMode::Local, new_run(&sc, 0));
    art.result.unwrap();
    let receipts = messages(&art.shared.frames.all())
        .into_iter()
        .filter(|e| e.msg_type == MsgType::ConfirmationOfReceipt)
        .count();
    assert_eq!(receipts, 9);
}
