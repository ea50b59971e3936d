use std::sync::Arc;

use crate::agents::{OrderId, Stop, TransportTask};
use crate::alias::Alias;
use crate::gridworld::{GridMap, MarkerId, NodeLabel, Phase, SegmentId, World, WorldEvent};
use crate::messaging::{
    ArrivalNotice, Bus, DepotArrival, Envelope, Fulfilment, Handler, MessagingError, MsgType,
    Payload, Performative, Reply, SegmentUse,
};

use super::depot::expect_confirm;
use super::AgentError;

/// Attempts at getting a receipt before a stop is written off.
pub const CONFIRM_ATTEMPTS: u32 = 3;

/// Things the run loop may want to surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TruckNote {
    Delivered {
        truck: Alias,
        customer: Alias,
        order_id: OrderId,
        node: MarkerId,
        tick: u64,
    },
    StopFailed {
        truck: Alias,
        order_id: OrderId,
        node: MarkerId,
        reason: String,
        tick: u64,
    },
    Finished {
        truck: Alias,
        tick: u64,
    },
}

/// Drives one truck through its task: departs, claims single-track
/// segments, announces arrivals, serves and reports back home.
#[derive(Debug, Clone)]
pub struct TruckAgent {
    alias: Alias,
    home: MarkerId,
    depot: Alias,
    orchestrator: Alias,
    map: Arc<GridMap>,
    /// Other trucks, asked before entering a single-track segment.
    peers: Vec<Alias>,
    task: Option<TransportTask>,
    departed: bool,
    finished: bool,
    next_stop: usize,
    serving: Option<(Stop, Alias)>,
    held: Option<SegmentId>,
    delivered: Vec<OrderId>,
    failed: Vec<OrderId>,
    blocks: u32,
}

impl TruckAgent {
    pub fn new(
        alias: Alias,
        home: MarkerId,
        depot: Alias,
        orchestrator: Alias,
        map: Arc<GridMap>,
        peers: Vec<Alias>,
    ) -> Self {
        let peers = peers.into_iter().filter(|p| p != &alias).collect();
        TruckAgent {
            alias,
            home,
            depot,
            orchestrator,
            map,
            peers,
            task: None,
            departed: false,
            finished: false,
            next_stop: 0,
            serving: None,
            held: None,
            delivered: Vec::new(),
            failed: Vec::new(),
            blocks: 0,
        }
    }

    pub fn alias(&self) -> &Alias {
        &self.alias
    }

    pub fn task(&self) -> Option<&TransportTask> {
        self.task.as_ref()
    }

    pub fn held_segment(&self) -> Option<&SegmentId> {
        self.held.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn delivered(&self) -> &[OrderId] {
        &self.delivered
    }

    pub fn failed(&self) -> &[OrderId] {
        &self.failed
    }

    /// Runs before the world advances. Returns whether the truck must stay
    /// put this tick because a segment it needs is taken.
    pub fn pre_move(
        &mut self,
        world: &mut World,
        bus: &Bus,
        notes: &mut Vec<TruckNote>,
    ) -> Result<bool, AgentError> {
        if self.finished {
            return Ok(false);
        }
        let Some(task) = &self.task else {
            return Ok(false);
        };
        if !self.departed {
            world.assign(&self.alias, &task.route, task.load)?;
            self.departed = true;
        }
        self.settle(world, bus, notes)?;
        self.gate(world, bus)
    }

    /// Reacts to this truck's events from the tick just applied.
    pub fn after_tick(
        &mut self,
        world: &mut World,
        bus: &Bus,
        events: &[WorldEvent],
        notes: &mut Vec<TruckNote>,
    ) -> Result<(), AgentError> {
        let me = self.alias.clone();
        for ev in events.iter().filter(|e| e.truck() == &me) {
            match ev {
                WorldEvent::EdgeEntered { .. } => {}
                WorldEvent::ArrivedAtNode { .. } => {
                    self.blocks += 1;
                    self.maybe_release(world, bus)?;
                }
                WorldEvent::ServiceComplete { node, tick, .. } => {
                    if let Some((stop, customer)) = self.serving.take() {
                        self.delivered.push(stop.order_id.clone());
                        notes.push(TruckNote::Delivered {
                            truck: self.alias.clone(),
                            customer,
                            order_id: stop.order_id,
                            node: *node,
                            tick: *tick,
                        });
                    }
                }
            }
        }
        if self.departed && !self.finished {
            self.settle(world, bus, notes)?;
        }
        Ok(())
    }

    fn state(&self, world: &World) -> crate::gridworld::TruckState {
        world
            .truck(&self.alias)
            .cloned()
            .expect("truck is placed in the world before it runs")
    }

    /// Handles everything that happens while standing at a node.
    fn settle(
        &mut self,
        world: &mut World,
        bus: &Bus,
        notes: &mut Vec<TruckNote>,
    ) -> Result<(), AgentError> {
        let tick = world.current_tick();
        loop {
            let st = self.state(world);
            if st.traversing.is_some() {
                return Ok(());
            }
            match st.phase {
                Phase::EnRoute => {
                    let stops = &self.task.as_ref().expect("departed").stops;
                    let Some(stop) = stops.get(self.next_stop).cloned() else {
                        world.set_returning(&self.alias)?;
                        continue;
                    };
                    if stop.marker != st.at {
                        return Ok(());
                    }
                    self.next_stop += 1;
                    match self.confirm(bus, &stop, tick) {
                        Ok(customer) => {
                            world.begin_service(&self.alias, stop.demand)?;
                            self.serving = Some((stop, customer));
                            return Ok(());
                        }
                        Err(reason) => {
                            self.failed.push(stop.order_id.clone());
                            notes.push(TruckNote::StopFailed {
                                truck: self.alias.clone(),
                                order_id: stop.order_id,
                                node: st.at,
                                reason,
                                tick,
                            });
                        }
                    }
                }
                Phase::Returning if st.route.is_empty() => {
                    self.release(bus, tick)?;
                    self.come_home(world, bus, tick)?;
                    notes.push(TruckNote::Finished {
                        truck: self.alias.clone(),
                        tick,
                    });
                    return Ok(());
                }
                _ => return Ok(()),
            }
        }
    }

    fn come_home(&mut self, world: &mut World, bus: &Bus, tick: u64) -> Result<(), AgentError> {
        let arrival = Payload::DepotArrival(DepotArrival {
            truck: self.alias.clone(),
            depot: self.depot.clone(),
            node: self.home,
        });
        expect_confirm(&bus.send(&self.alias, &self.depot, arrival, tick)?)?;
        let task = self.task.as_ref().expect("departed");
        let done = Payload::FulfilmentComplete(Fulfilment {
            truck: self.alias.clone(),
            task_id: task.task_id.clone(),
            delivered: self.delivered.clone(),
            failed: self.failed.clone(),
            blocks: self.blocks,
        });
        expect_confirm(&bus.send(&self.alias, &self.orchestrator, done, tick)?)?;
        world.finish(&self.alias)?;
        self.finished = true;
        Ok(())
    }

    /// Notice of arrival until a receipt comes back, with bounded retries
    /// when the customer does not answer.
    fn confirm(&self, bus: &Bus, stop: &Stop, tick: u64) -> Result<Alias, String> {
        let customer = match self.map.label_of(stop.marker) {
            Some(NodeLabel::Customer(name)) => Alias::new(name.as_str()).map_err(|e| e.to_string())?,
            _ => return Err(format!("no customer at {}", stop.marker)),
        };
        let notice = Payload::NoticeOfArrival(ArrivalNotice {
            truck: self.alias.clone(),
            customer: customer.clone(),
            order_id: stop.order_id.clone(),
            node: stop.marker,
        });
        let mut last = String::new();
        for _ in 0..CONFIRM_ATTEMPTS {
            match bus.send(&self.alias, &customer, notice.clone(), tick) {
                Ok(reply) => return receipt_of(&reply, stop).map(|_| customer),
                Err(e @ (MessagingError::Timeout(_) | MessagingError::Transport(_))) => {
                    last = e.to_string();
                }
                Err(e) => return Err(e.to_string()),
            }
        }
        Err(format!("no receipt after {CONFIRM_ATTEMPTS} attempts: {last}"))
    }

    /// Claims the segment of the next edge if needed; true means wait.
    fn gate(&mut self, world: &World, bus: &Bus) -> Result<bool, AgentError> {
        let st = self.state(world);
        if st.traversing.is_some() || !matches!(st.phase, Phase::EnRoute | Phase::Returning) {
            return Ok(false);
        }
        let Some(edge) = st.next_edge() else {
            return Ok(false);
        };
        let Some(segment) = self.map.segment_of(edge)?.cloned() else {
            self.release(bus, world.current_tick())?;
            return Ok(false);
        };
        if self.held.as_ref() == Some(&segment) {
            return Ok(false);
        }
        // never hold one segment while waiting on another
        self.release(bus, world.current_tick())?;
        let claim = Payload::SegmentClaim(SegmentUse {
            truck: self.alias.clone(),
            segment: segment.clone(),
        });
        for peer in &self.peers {
            let reply = bus.send(&self.alias, peer, claim.clone(), world.current_tick())?;
            if reply.performative == Performative::Refuse {
                return Ok(true);
            }
        }
        self.held = Some(segment);
        Ok(false)
    }

    fn maybe_release(&mut self, world: &World, bus: &Bus) -> Result<(), AgentError> {
        let Some(held) = &self.held else {
            return Ok(());
        };
        let st = self.state(world);
        let stays = match st.next_edge() {
            Some(e) => self.map.segment_of(e)? == Some(held),
            None => false,
        };
        if !stays {
            self.release(bus, world.current_tick())?;
        }
        Ok(())
    }

    fn release(&mut self, bus: &Bus, tick: u64) -> Result<(), AgentError> {
        let Some(segment) = self.held.take() else {
            return Ok(());
        };
        let release = Payload::SegmentRelease(SegmentUse {
            truck: self.alias.clone(),
            segment,
        });
        for peer in &self.peers {
            bus.send(&self.alias, peer, release.clone(), tick)?;
        }
        Ok(())
    }
}

fn receipt_of(reply: &Envelope, stop: &Stop) -> Result<(), String> {
    if reply.performative != Performative::Confirm
        || reply.msg_type != MsgType::ConfirmationOfReceipt
    {
        return Err(reply
            .refusal_reason()
            .unwrap_or_else(|| format!("unexpected {} reply", reply.msg_type)));
    }
    match reply.payload() {
        Ok(Payload::ConfirmationOfReceipt(r)) if r.order_id == stop.order_id => Ok(()),
        _ => Err("receipt does not match the order".into()),
    }
}

impl Handler for TruckAgent {
    fn handle(&mut self, request: &Envelope, payload: Payload, _: &Bus) -> Reply {
        match payload {
            Payload::TransportTask(task) => {
                if request.sender != self.depot || task.truck != self.alias {
                    return Reply::Refuse("task is not for this truck".into());
                }
                if self.departed && !self.finished {
                    return Reply::Refuse("already on a task".into());
                }
                if !task.is_well_formed() || task.route.first() != Some(&self.home) {
                    return Reply::Refuse("task route must be a tour from this depot".into());
                }
                if let Err(e) = self.map.route_length(&task.route) {
                    return Reply::Refuse(e.to_string());
                }
                self.task = Some(task);
                self.departed = false;
                self.finished = false;
                self.next_stop = 0;
                self.delivered.clear();
                self.failed.clear();
                self.blocks = 0;
                Reply::ack()
            }
            Payload::SegmentClaim(claim) => {
                if self.held.as_ref() == Some(&claim.segment) {
                    Reply::Refuse(format!("{} is held by {}", claim.segment, self.alias))
                } else {
                    Reply::ack()
                }
            }
            Payload::SegmentRelease(_) => Reply::ack(),
            _ => Reply::Refuse(format!("truck does not accept {}", request.msg_type)),
        }
    }
}
