use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::agents::{DistanceReport, TransportTask, TruckReduction};
use crate::alias::Alias;
use crate::gridworld::{GridMap, Timing};
use crate::messaging::{
    Bus, Envelope, Fulfilment, Handler, OrderSubmission, Payload, Reply, RoutePlanMsg,
};
use crate::solver::{self, Instance, Mode, Plan, SolverError};

use super::depot::expect_confirm;
use super::AgentError;

/// Which search the orchestrator runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveStrategy {
    /// Exact where it fits, heuristic beyond.
    #[default]
    Auto,
    Exact,
    Heuristic,
}

impl SolveStrategy {
    pub fn solve(self, inst: &Instance) -> Result<Plan, SolverError> {
        match self {
            SolveStrategy::Auto => solver::solve(inst),
            SolveStrategy::Exact => solver::solve_exact(inst),
            SolveStrategy::Heuristic => solver::solve_heuristic(inst),
        }
    }
}

/// Pools the carriers' disclosures, plans jointly and accounts for the
/// saving once every truck is home.
#[derive(Debug, Clone)]
pub struct OrchestratorAgent {
    alias: Alias,
    map: Arc<GridMap>,
    timing: Timing,
    strategy: SolveStrategy,
    carriers: BTreeSet<Alias>,
    submissions: BTreeMap<Alias, OrderSubmission>,
    baseline: Option<Plan>,
    plan: Option<Plan>,
    fulfilments: BTreeMap<Alias, Fulfilment>,
}

impl OrchestratorAgent {
    pub fn new(
        alias: Alias,
        map: Arc<GridMap>,
        timing: Timing,
        strategy: SolveStrategy,
        carriers: impl IntoIterator<Item = Alias>,
    ) -> Self {
        OrchestratorAgent {
            alias,
            map,
            timing,
            strategy,
            carriers: carriers.into_iter().collect(),
            submissions: BTreeMap::new(),
            baseline: None,
            plan: None,
            fulfilments: BTreeMap::new(),
        }
    }

    pub fn alias(&self) -> &Alias {
        &self.alias
    }

    pub fn baseline(&self) -> Option<&Plan> {
        self.baseline.as_ref()
    }

    pub fn plan(&self) -> Option<&Plan> {
        self.plan.as_ref()
    }

    pub fn fulfilments(&self) -> &BTreeMap<Alias, Fulfilment> {
        &self.fulfilments
    }

    fn instance(&self) -> Result<Instance, AgentError> {
        let missing: Vec<_> = self
            .carriers
            .iter()
            .filter(|c| !self.submissions.contains_key(*c))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(AgentError::MissingSubmissions(missing));
        }
        let fleets = self
            .submissions
            .values()
            .map(|s| (s.carrier.clone(), s.fleet.clone()));
        let orders = self
            .submissions
            .values()
            .flat_map(|s| s.orders.iter().cloned())
            .collect();
        Ok(
            Instance::from_disclosures(self.map.clone(), fleets, orders, Mode::Collaborative)
                .with_timing(self.timing),
        )
    }

    /// Solves both the go-it-alone and the pooled problem.
    pub fn compute_plans(&mut self) -> Result<(), AgentError> {
        let inst = self.instance()?;
        let solve = |inst: &Instance| match self.strategy.solve(inst) {
            Err(SolverError::Infeasible(why)) => Err(AgentError::SolverInfeasible(why)),
            other => other.map_err(AgentError::Solver),
        };
        let plan = solve(&inst)?;
        let baseline = solve(&inst.with_mode(Mode::Baseline))?;
        self.plan = Some(plan);
        self.baseline = Some(baseline);
        Ok(())
    }

    /// The joint plan restricted to one carrier's trucks.
    pub fn plan_for(&self, carrier: &Alias) -> Option<RoutePlanMsg> {
        let plan = self.plan.as_ref()?;
        let sub = self.submissions.get(carrier)?;
        let tasks = sub
            .fleet
            .iter()
            .filter_map(|f| plan.tour(&f.alias))
            .map(|t| TransportTask {
                task_id: format!("task-{}", t.truck),
                truck: t.truck.clone(),
                route: t.route.clone(),
                stops: t.stops.clone(),
                load: t.load,
            })
            .collect();
        Some(RoutePlanMsg {
            carrier: carrier.clone(),
            tasks,
        })
    }

    /// Plans (if not yet done) and sends every carrier its share.
    pub fn dispatch_plans(&mut self, bus: &Bus, tick: u64) -> Result<(), AgentError> {
        if self.plan.is_none() {
            self.compute_plans()?;
        }
        for carrier in &self.carriers {
            let msg = self.plan_for(carrier).expect("every carrier submitted");
            let reply = bus.send(&self.alias, carrier, Payload::RoutePlan(msg), tick)?;
            expect_confirm(&reply)?;
        }
        Ok(())
    }

    fn trucks(&self) -> impl Iterator<Item = &Alias> {
        self.submissions
            .values()
            .flat_map(|s| s.fleet.iter().map(|f| &f.alias))
    }

    pub fn all_fulfilled(&self) -> bool {
        self.plan.is_some() && self.trucks().all(|t| self.fulfilments.contains_key(t))
    }

    /// Saving achieved by pooling, once every truck has reported back.
    pub fn report_reduction(&self) -> Result<DistanceReport, AgentError> {
        let missing: Vec<Alias> = self
            .trucks()
            .filter(|t| !self.fulfilments.contains_key(*t))
            .cloned()
            .collect();
        let (Some(pre), Some(post)) = (&self.baseline, &self.plan) else {
            return Err(AgentError::IncompleteRun(self.trucks().cloned().collect()));
        };
        if !missing.is_empty() {
            return Err(AgentError::IncompleteRun(missing));
        }
        let per_truck = post
            .tours
            .values()
            .map(|after| {
                let before = pre.tour(&after.truck).expect("both plans cover every truck");
                TruckReduction {
                    truck: after.truck.clone(),
                    before_route: before.route.clone(),
                    after_route: after.route.clone(),
                    before_blocks: before.blocks,
                    after_blocks: after.blocks,
                }
            })
            .collect();
        let mut report = DistanceReport::new(pre.total_blocks, post.total_blocks, per_truck);
        report.failed_stops = self
            .fulfilments
            .values()
            .flat_map(|f| f.failed.iter().cloned())
            .collect();
        Ok(report)
    }

    /// Computes the report and tells every carrier.
    pub fn broadcast_report(&self, bus: &Bus, tick: u64) -> Result<DistanceReport, AgentError> {
        let report = self.report_reduction()?;
        for carrier in &self.carriers {
            let reply = bus.send(
                &self.alias,
                carrier,
                Payload::DistanceReport(report.clone()),
                tick,
            )?;
            expect_confirm(&reply)?;
        }
        Ok(report)
    }

    fn owner_of(&self, truck: &Alias) -> Option<&Alias> {
        self.submissions
            .values()
            .find(|s| s.fleet.iter().any(|f| &f.alias == truck))
            .map(|s| &s.carrier)
    }
}

impl Handler for OrchestratorAgent {
    fn handle(&mut self, request: &Envelope, payload: Payload, _: &Bus) -> Reply {
        match payload {
            Payload::TransportOrder(sub) => {
                if sub.carrier != request.sender || !self.carriers.contains(&sub.carrier) {
                    return Reply::Refuse(format!("{} is not a participating carrier", sub.carrier));
                }
                if let Some(o) = sub.orders.iter().find(|o| o.carrier != sub.carrier) {
                    return Reply::Refuse(format!("order {} belongs to {}", o.order_id, o.carrier));
                }
                if self.plan.is_some() {
                    return Reply::Refuse("planning already closed".into());
                }
                self.submissions.insert(sub.carrier.clone(), sub);
                Reply::ack()
            }
            Payload::FulfilmentComplete(f) => {
                if f.truck != request.sender || self.owner_of(&f.truck).is_none() {
                    return Reply::Refuse(format!("{} has no task", f.truck));
                }
                self.fulfilments.insert(f.truck.clone(), f);
                Reply::ack()
            }
            _ => Reply::Refuse(format!("orchestrator does not accept {}", request.msg_type)),
        }
    }
}
