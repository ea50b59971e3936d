//! Typed request/reply messaging between agents, with alias discovery
//! through a nameserver and the NDS phonebook.

mod bus;
mod clock;
mod envelope;
pub mod http;
pub mod nameserver;
pub mod nds;
pub mod tcp;
pub mod wire;

pub use bus::{
    check_correlation, Bus, Directory, Handler, IdSource, LocalTransport, MessageLog,
    MessageSink, NullSink, SharedHandler, Transport,
};
pub use clock::{ClockMode, DEFAULT_TIMEOUT};
pub use envelope::{
    ArrivalNotice, DepotArrival, Envelope, Fulfilment, MsgId, MsgType, OrderSubmission, Payload,
    Performative, Receipt, Refusal, Reply, RoutePlanMsg, SegmentUse,
};

use crate::alias::Alias;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NameserverError {
    #[error("alias {alias} is already registered at {endpoint}")]
    AliasTaken { alias: Alias, endpoint: String },
    #[error("alias {0} is not registered")]
    NotFound(Alias),
    #[error("nameserver unreachable: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NdsError {
    #[error("no NDS entry for {0}")]
    NotFound(Alias),
    #[error("invalid address {0:?}, expected host:port")]
    InvalidAddress(String),
    #[error("NDS storage: {0}")]
    Io(String),
    #[error("NDS request failed: {0}")]
    Http(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MessagingError {
    #[error("cannot resolve {0}")]
    Unresolvable(Alias),
    #[error("no reply from {0} in time")]
    Timeout(Alias),
    #[error("transport: {0}")]
    Transport(String),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error(transparent)]
    Nameserver(#[from] NameserverError),
    #[error(transparent)]
    Nds(#[from] NdsError),
}
