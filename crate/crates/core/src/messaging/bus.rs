use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use super::clock::ClockMode;
use super::envelope::{Envelope, MsgId, Payload, Performative, Reply};
use super::MessagingError;
use crate::agents::AgentKind;
use crate::alias::Alias;

/// Behaviour invoked for each inbound request. Calls on one handler are
/// serialised by the mutex it lives behind.
pub trait Handler: Send {
    fn handle(&mut self, request: &Envelope, payload: Payload, bus: &Bus) -> Reply;
}

pub type SharedHandler = Arc<Mutex<dyn Handler>>;

/// Moves a request to its recipient and brings back the reply.
pub trait Transport: Send + Sync {
    fn deliver(&self, request: &Envelope, bus: &Bus) -> Result<Envelope, MessagingError>;
}

/// Receives every envelope the bus sends or receives, in order.
pub trait MessageSink: Send + Sync {
    fn record(&self, envelope: &Envelope);
}

/// Discards everything.
pub struct NullSink;

impl MessageSink for NullSink {
    fn record(&self, _: &Envelope) {}
}

/// Append-only in-memory message log.
#[derive(Default)]
pub struct MessageLog {
    entries: Mutex<Vec<Envelope>>,
}

impl MessageLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> Vec<Envelope> {
        self.entries.lock().expect("message log poisoned").clone()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("message log poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl MessageSink for MessageLog {
    fn record(&self, envelope: &Envelope) {
        self.entries
            .lock()
            .expect("message log poisoned")
            .push(envelope.clone());
    }
}

/// Checks that every reply pairs with exactly one earlier request.
pub fn check_correlation(log: &[Envelope]) -> Result<(), String> {
    let mut open: BTreeMap<&MsgId, &Envelope> = BTreeMap::new();
    let mut answered = std::collections::BTreeSet::new();
    for e in log {
        match e.performative {
            Performative::Request => {
                if open.insert(&e.msg_id, e).is_some() || answered.contains(&e.msg_id) {
                    return Err(format!("request id {} reused", e.msg_id));
                }
            }
            _ => {
                let Some(cid) = &e.correlation_id else {
                    return Err(format!("reply {} has no correlation id", e.msg_id));
                };
                let Some(req) = open.remove(cid) else {
                    return Err(format!("reply {} pairs with no open request", e.msg_id));
                };
                if req.sender != e.recipient || req.recipient != e.sender {
                    return Err(format!("reply {} goes to the wrong party", e.msg_id));
                }
                answered.insert(cid);
            }
        }
    }
    Ok(())
}

/// Monotone message-id generator shared by every bus of one deployment.
#[derive(Debug)]
pub struct IdSource {
    prefix: String,
    next: AtomicU64,
}

impl IdSource {
    pub fn new(prefix: impl Into<String>) -> Self {
        IdSource {
            prefix: prefix.into(),
            next: AtomicU64::new(1),
        }
    }

    pub fn next_id(&self) -> MsgId {
        let n = self.next.fetch_add(1, Ordering::Relaxed);
        MsgId(format!("{}{n:06}", self.prefix))
    }
}

/// Which kind each alias is, for bus-level routing rules.
pub type Directory = BTreeMap<Alias, AgentKind>;

/// Carriers (depots) and customers never talk directly.
fn forbidden_pair(directory: &Directory, a: &Alias, b: &Alias) -> bool {
    matches!(
        (directory.get(a), directory.get(b)),
        (Some(AgentKind::Depot), Some(AgentKind::Customer))
            | (Some(AgentKind::Customer), Some(AgentKind::Depot))
    )
}

/// Request/reply messaging shared by all agents of one deployment.
#[derive(Clone)]
pub struct Bus {
    transport: Arc<dyn Transport>,
    sink: Arc<dyn MessageSink>,
    clock: ClockMode,
    ids: Arc<IdSource>,
    directory: Arc<Directory>,
}

impl Bus {
    pub fn new(
        transport: Arc<dyn Transport>,
        sink: Arc<dyn MessageSink>,
        clock: ClockMode,
        ids: Arc<IdSource>,
        directory: Arc<Directory>,
    ) -> Self {
        Bus {
            transport,
            sink,
            clock,
            ids,
            directory,
        }
    }

    pub fn clock(&self) -> ClockMode {
        self.clock
    }

    pub fn directory(&self) -> &Directory {
        &self.directory
    }

    /// Sends `payload` as a request and waits for the reply. A refusal is a
    /// successful exchange; errors mean no reply arrived.
    pub fn send(
        &self,
        from: &Alias,
        to: &Alias,
        payload: Payload,
        tick: u64,
    ) -> Result<Envelope, MessagingError> {
        let request = Envelope {
            msg_id: self.ids.next_id(),
            correlation_id: None,
            sender: from.clone(),
            recipient: to.clone(),
            performative: Performative::Request,
            msg_type: payload.msg_type(),
            payload: payload.to_value(),
            sim_tick: tick,
            sent_at: self.clock.timestamp(tick),
        };
        self.send_request(&request)
    }

    /// Sends a prebuilt request envelope.
    pub fn send_request(&self, request: &Envelope) -> Result<Envelope, MessagingError> {
        self.sink.record(request);
        let reply = if forbidden_pair(&self.directory, &request.sender, &request.recipient) {
            Reply::Refuse("direct carrier-customer messaging is disabled".into())
                .into_envelope(request, self.clock.timestamp(request.sim_tick))
        } else {
            self.transport.deliver(request, self)?
        };
        if !reply.is_reply_to(request) {
            return Err(MessagingError::Protocol(format!(
                "reply {} does not answer {}",
                reply.msg_id, request.msg_id
            )));
        }
        self.sink.record(&reply);
        Ok(reply)
    }

    /// Runs one inbound request through schema validation and the handler.
    pub fn dispatch(&self, handler: &Mutex<dyn Handler>, request: &Envelope) -> Envelope {
        let at = self.clock.timestamp(request.sim_tick);
        if request.performative != Performative::Request {
            return Reply::Refuse("expected a request".into()).into_envelope(request, at);
        }
        if forbidden_pair(&self.directory, &request.sender, &request.recipient) {
            return Reply::Refuse("direct carrier-customer messaging is disabled".into())
                .into_envelope(request, at);
        }
        let payload = match request.payload() {
            Ok(p) => p,
            Err(e) => {
                return Reply::Refuse(format!("malformed {} payload: {e}", request.msg_type))
                    .into_envelope(request, at)
            }
        };
        let reply = handler
            .lock()
            .expect("agent handler poisoned")
            .handle(request, payload, self);
        reply.into_envelope(request, at)
    }
}

/// In-process delivery straight into the recipient's handler.
#[derive(Default)]
pub struct LocalTransport {
    agents: RwLock<BTreeMap<Alias, SharedHandler>>,
}

impl LocalTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&self, alias: Alias, handler: SharedHandler) {
        self.agents
            .write()
            .expect("local transport poisoned")
            .insert(alias, handler);
    }

    pub fn unregister(&self, alias: &Alias) {
        self.agents
            .write()
            .expect("local transport poisoned")
            .remove(alias);
    }
}

impl Transport for LocalTransport {
    fn deliver(&self, request: &Envelope, bus: &Bus) -> Result<Envelope, MessagingError> {
        let handler = self
            .agents
            .read()
            .expect("local transport poisoned")
            .get(&request.recipient)
            .cloned()
            .ok_or_else(|| MessagingError::Unresolvable(request.recipient.clone()))?;
        Ok(bus.dispatch(&handler, request))
    }
}
