use crate::agents::{DistanceReport, FleetEntry, TransportOrder};
use crate::alias::Alias;
use crate::gridworld::MarkerId;
use crate::messaging::{
    Bus, DepotArrival, Envelope, Handler, OrderSubmission, Payload, Performative, Reply,
};

use super::AgentError;

/// A carrier and its depot: discloses orders, forwards the resulting tasks
/// to its own trucks and receives them back home.
#[derive(Debug, Clone)]
pub struct DepotAgent {
    alias: Alias,
    home: MarkerId,
    orchestrator: Alias,
    orders: Vec<TransportOrder>,
    fleet: Vec<FleetEntry>,
    arrivals: Vec<DepotArrival>,
    report: Option<DistanceReport>,
}

impl DepotAgent {
    pub fn new(
        alias: Alias,
        home: MarkerId,
        orchestrator: Alias,
        orders: Vec<TransportOrder>,
        fleet: Vec<FleetEntry>,
    ) -> Self {
        DepotAgent {
            alias,
            home,
            orchestrator,
            orders,
            fleet,
            arrivals: Vec::new(),
            report: None,
        }
    }

    pub fn alias(&self) -> &Alias {
        &self.alias
    }

    pub fn home(&self) -> MarkerId {
        self.home
    }

    pub fn arrivals(&self) -> &[DepotArrival] {
        &self.arrivals
    }

    pub fn report(&self) -> Option<&DistanceReport> {
        self.report.as_ref()
    }

    /// Sends this carrier's orders and fleet facts to the orchestrator.
    pub fn submit(&self, bus: &Bus, tick: u64) -> Result<(), AgentError> {
        let payload = Payload::TransportOrder(OrderSubmission {
            carrier: self.alias.clone(),
            orders: self.orders.clone(),
            fleet: self.fleet.clone(),
        });
        let reply = bus.send(&self.alias, &self.orchestrator, payload, tick)?;
        expect_confirm(&reply)
    }

    fn owns(&self, truck: &Alias) -> bool {
        self.fleet.iter().any(|f| &f.alias == truck)
    }
}

pub(crate) fn expect_confirm(reply: &Envelope) -> Result<(), AgentError> {
    match reply.performative {
        Performative::Confirm | Performative::Inform => Ok(()),
        _ => Err(AgentError::Refused {
            by: reply.sender.clone(),
            msg_type: reply.msg_type,
            reason: reply.refusal_reason().unwrap_or_default(),
        }),
    }
}

impl Handler for DepotAgent {
    fn handle(&mut self, request: &Envelope, payload: Payload, bus: &Bus) -> Reply {
        match payload {
            Payload::RoutePlan(plan) => {
                if request.sender != self.orchestrator || plan.carrier != self.alias {
                    return Reply::Refuse("route plan is not for this carrier".into());
                }
                if let Some(t) = plan.tasks.iter().find(|t| !self.owns(&t.truck)) {
                    return Reply::Refuse(format!("{} is not in this fleet", t.truck));
                }
                for task in plan.tasks {
                    let truck = task.truck.clone();
                    let sent = bus.send(
                        &self.alias,
                        &truck,
                        Payload::TransportTask(task),
                        request.sim_tick,
                    );
                    match sent.map_err(AgentError::from).and_then(|r| expect_confirm(&r)) {
                        Ok(()) => {}
                        Err(e) => return Reply::Refuse(format!("{truck} rejected its task: {e}")),
                    }
                }
                Reply::ack()
            }
            Payload::DepotArrival(arrival) => {
                if !self.owns(&arrival.truck) || arrival.node != self.home {
                    return Reply::Refuse("not a truck of this depot".into());
                }
                self.arrivals.push(arrival);
                Reply::ack()
            }
            Payload::DistanceReport(report) => {
                self.report = Some(report);
                Reply::ack()
            }
            _ => Reply::Refuse(format!("depot does not accept {}", request.msg_type)),
        }
    }
}
