//! Wiring agents to a transport: in-process, or each behind its own TCP
//! endpoint discovered through the nameserver.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use crate::agents::{
    AgentKind, CustomerAgent, DepotAgent, OrchestratorAgent, SolveStrategy, TruckAgent,
};
use crate::alias::Alias;
use crate::messaging::nds::NdsClient;
use crate::messaging::tcp::{AgentServer, Resolver, TcpTransport};
use crate::messaging::{
    Bus, ClockMode, Directory, IdSource, LocalTransport, MessageSink, MessagingError,
    SharedHandler,
};
use crate::scenario::Scenario;

/// Every agent of one scenario.
pub struct AgentSet {
    pub orchestrator: Arc<Mutex<OrchestratorAgent>>,
    pub depots: BTreeMap<Alias, Arc<Mutex<DepotAgent>>>,
    pub trucks: BTreeMap<Alias, Arc<Mutex<TruckAgent>>>,
    pub customers: BTreeMap<Alias, Arc<Mutex<CustomerAgent>>>,
}

impl AgentSet {
    pub fn from_scenario(scenario: &Scenario, strategy: SolveStrategy) -> Self {
        let file = scenario.file();
        let map = scenario.map().clone();
        let orch = scenario.orchestrator();
        let orders = scenario.orders();
        let carriers: Vec<Alias> = file.depots.iter().map(|d| d.label.clone()).collect();
        let all_trucks: Vec<Alias> = scenario.fleet().into_iter().map(|f| f.alias).collect();

        let customers = file
            .customers
            .iter()
            .map(|c| {
                let expected = orders
                    .iter()
                    .filter(|o| o.customer == c.label)
                    .map(|o| o.order_id.clone())
                    .collect();
                let agent = CustomerAgent::new(c.label.clone(), c.marker, expected);
                (c.label.clone(), Arc::new(Mutex::new(agent)))
            })
            .collect();
        let depots = file
            .depots
            .iter()
            .map(|d| {
                let agent = DepotAgent::new(
                    d.label.clone(),
                    d.marker,
                    orch.clone(),
                    scenario.orders_of(&d.label),
                    scenario.fleet_of(&d.label),
                );
                (d.label.clone(), Arc::new(Mutex::new(agent)))
            })
            .collect();
        let trucks = file
            .depots
            .iter()
            .flat_map(|d| d.trucks.iter().map(move |t| (d, t)))
            .map(|(d, t)| {
                let agent = TruckAgent::new(
                    t.alias.clone(),
                    d.marker,
                    d.label.clone(),
                    orch.clone(),
                    map.clone(),
                    all_trucks.clone(),
                );
                (t.alias.clone(), Arc::new(Mutex::new(agent)))
            })
            .collect();
        let orchestrator = OrchestratorAgent::new(
            orch,
            map.clone(),
            scenario.timing(),
            strategy,
            carriers,
        );
        AgentSet {
            orchestrator: Arc::new(Mutex::new(orchestrator)),
            depots,
            trucks,
            customers,
        }
    }

    /// Handlers in launch order: the non-truck agents first, trucks last,
    /// so every truck finds its counterparts already listening.
    pub fn launch_order(&self) -> Vec<(Alias, AgentKind, SharedHandler)> {
        let mut out: Vec<(Alias, AgentKind, SharedHandler)> = Vec::new();
        for (a, h) in &self.customers {
            out.push((a.clone(), AgentKind::Customer, h.clone()));
        }
        for (a, h) in &self.depots {
            out.push((a.clone(), AgentKind::Depot, h.clone()));
        }
        let orch = self.orchestrator.lock().expect("orchestrator poisoned").alias().clone();
        out.push((orch, AgentKind::Orchestrator, self.orchestrator.clone()));
        for (a, h) in &self.trucks {
            out.push((a.clone(), AgentKind::Truck, h.clone()));
        }
        out
    }

    pub fn directory(&self) -> Directory {
        self.launch_order()
            .into_iter()
            .map(|(a, k, _)| (a, k))
            .collect()
    }
}

/// Where the networked deployment finds the nameserver.
#[derive(Debug, Clone)]
pub struct NetworkConfig {
    pub nds_url: String,
    /// NDS nickname under which the nameserver publishes itself.
    pub nameserver: Alias,
    pub bind_host: String,
    pub timeout: Option<Duration>,
    /// How often agents refresh their registration.
    pub heartbeat: Duration,
    pub patience: Duration,
}

impl NetworkConfig {
    pub fn new(nds_url: impl Into<String>) -> Self {
        NetworkConfig {
            nds_url: nds_url.into(),
            nameserver: Alias::new("nameserver").expect("valid alias"),
            bind_host: "127.0.0.1".into(),
            timeout: None,
            heartbeat: Duration::from_millis(50),
            patience: Duration::from_secs(5),
        }
    }
}

struct Keeper {
    stop: Arc<AtomicBool>,
    join: JoinHandle<()>,
}

/// A launched set of agents plus the bus they talk over.
pub struct Deployment {
    pub agents: AgentSet,
    pub bus: Bus,
    servers: Vec<AgentServer>,
    tcp: Option<Arc<TcpTransport>>,
    resolver: Option<Arc<Resolver>>,
    keeper: Option<Keeper>,
}

impl Deployment {
    pub fn local(
        scenario: &Scenario,
        strategy: SolveStrategy,
        sink: Arc<dyn MessageSink>,
        clock: ClockMode,
    ) -> Self {
        let agents = AgentSet::from_scenario(scenario, strategy);
        let transport = Arc::new(LocalTransport::new());
        for (alias, _, handler) in agents.launch_order() {
            transport.register(alias, handler);
        }
        let bus = Bus::new(
            transport,
            sink,
            clock,
            Arc::new(IdSource::new("m")),
            Arc::new(agents.directory()),
        );
        Deployment {
            agents,
            bus,
            servers: Vec::new(),
            tcp: None,
            resolver: None,
            keeper: None,
        }
    }

    /// Starts one TCP endpoint per agent and registers each alias with the
    /// nameserver that the NDS currently points at.
    pub fn tcp(
        scenario: &Scenario,
        strategy: SolveStrategy,
        sink: Arc<dyn MessageSink>,
        clock: ClockMode,
        net: &NetworkConfig,
    ) -> Result<Self, MessagingError> {
        let agents = AgentSet::from_scenario(scenario, strategy);
        let timeout = net.timeout.or(clock.default_timeout());
        let resolver = Arc::new(Resolver::new(
            NdsClient::new(net.nds_url.clone()),
            net.nameserver.clone(),
            timeout,
        ));
        let transport =
            Arc::new(TcpTransport::new(resolver.clone(), timeout).with_patience(net.patience));
        let bus = Bus::new(
            transport.clone(),
            sink,
            clock,
            Arc::new(IdSource::new("m")),
            Arc::new(agents.directory()),
        );
        let mut servers = Vec::new();
        let bind = format!("{}:0", net.bind_host);
        for (alias, _, handler) in agents.launch_order() {
            let server = AgentServer::spawn(&bind, alias.clone(), handler, bus.clone())
                .map_err(|e| MessagingError::Transport(e.to_string()))?;
            resolver.register(&alias, &server.endpoint())?;
            servers.push(server);
        }
        let registrations: Vec<(Alias, String)> = servers
            .iter()
            .map(|s| (s.alias().clone(), s.endpoint()))
            .collect();
        let stop = Arc::new(AtomicBool::new(false));
        let join = {
            let resolver = resolver.clone();
            let stop = stop.clone();
            let heartbeat = net.heartbeat;
            std::thread::spawn(move || {
                while !stop.load(Ordering::SeqCst) {
                    std::thread::sleep(heartbeat);
                    for (alias, endpoint) in &registrations {
                        // a restarted nameserver starts empty; fill it back in
                        if resolver.register(alias, endpoint).is_err() {
                            break;
                        }
                    }
                }
            })
        };
        Ok(Deployment {
            agents,
            bus,
            servers,
            tcp: Some(transport),
            resolver: Some(resolver),
            keeper: Some(Keeper { stop, join }),
        })
    }

    /// Drops cached peer addresses so the next sends resolve afresh.
    pub fn forget_addresses(&self) {
        if let Some(t) = &self.tcp {
            t.clear_cache();
        }
    }

    pub fn endpoints(&self) -> Vec<(Alias, String)> {
        self.servers
            .iter()
            .map(|s| (s.alias().clone(), s.endpoint()))
            .collect()
    }

    pub fn shutdown(&mut self) {
        if let Some(k) = self.keeper.take() {
            k.stop.store(true, Ordering::SeqCst);
            let _ = k.join.join();
        }
        for s in &mut self.servers {
            if let Some(r) = &self.resolver {
                // best effort: a later run may reuse the alias
                let _ = r.unregister(s.alias());
            }
            s.shutdown();
        }
        self.servers.clear();
    }
}

impl Drop for Deployment {
    fn drop(&mut self) {
        self.shutdown();
    }
}
