//! Alias registry: agents find each other by nickname rather than address.

use std::collections::BTreeMap;
use std::io;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::tcp::{exchange, serve_frames, ServerHandle};
use super::nds::NdsClient;
use super::{NameserverError, NdsError};
use crate::alias::Alias;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum NsRequest {
    Register { alias: Alias, endpoint: String },
    Unregister { alias: Alias },
    Resolve { alias: Alias },
    List,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NsResponse {
    Ok,
    Endpoint { endpoint: String },
    Entries { entries: BTreeMap<Alias, String> },
    AliasTaken { alias: Alias, endpoint: String },
    NotFound { alias: Alias },
}

/// In-memory alias table with atomic per-alias updates.
#[derive(Debug, Default)]
pub struct Registry {
    entries: Mutex<BTreeMap<Alias, String>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Re-registering the same endpoint is a no-op.
    pub fn register(&self, alias: &Alias, endpoint: &str) -> Result<(), NameserverError> {
        let mut entries = self.entries.lock().expect("registry poisoned");
        match entries.get(alias) {
            Some(existing) if existing != endpoint => Err(NameserverError::AliasTaken {
                alias: alias.clone(),
                endpoint: existing.clone(),
            }),
            _ => {
                entries.insert(alias.clone(), endpoint.to_owned());
                Ok(())
            }
        }
    }

    pub fn resolve(&self, alias: &Alias) -> Result<String, NameserverError> {
        self.entries
            .lock()
            .expect("registry poisoned")
            .get(alias)
            .cloned()
            .ok_or_else(|| NameserverError::NotFound(alias.clone()))
    }

    pub fn unregister(&self, alias: &Alias) -> Result<(), NameserverError> {
        self.entries
            .lock()
            .expect("registry poisoned")
            .remove(alias)
            .map(|_| ())
            .ok_or_else(|| NameserverError::NotFound(alias.clone()))
    }

    pub fn entries(&self) -> BTreeMap<Alias, String> {
        self.entries.lock().expect("registry poisoned").clone()
    }

    pub fn handle(&self, req: NsRequest) -> NsResponse {
        let result = match req {
            NsRequest::Register { alias, endpoint } => {
                self.register(&alias, &endpoint).map(|_| NsResponse::Ok)
            }
            NsRequest::Unregister { alias } => self.unregister(&alias).map(|_| NsResponse::Ok),
            NsRequest::Resolve { alias } => self
                .resolve(&alias)
                .map(|endpoint| NsResponse::Endpoint { endpoint }),
            NsRequest::List => Ok(NsResponse::Entries {
                entries: self.entries(),
            }),
        };
        match result {
            Ok(r) => r,
            Err(NameserverError::AliasTaken { alias, endpoint }) => {
                NsResponse::AliasTaken { alias, endpoint }
            }
            Err(NameserverError::NotFound(alias)) => NsResponse::NotFound { alias },
            Err(NameserverError::Io(_)) => unreachable!("registry does no I/O"),
        }
    }
}

/// Registry served over TCP with the envelope framing.
pub struct NameserverServer {
    registry: Arc<Registry>,
    handle: ServerHandle,
}

impl NameserverServer {
    pub fn spawn(bind: &str) -> io::Result<Self> {
        let registry = Arc::new(Registry::new());
        let r = registry.clone();
        let handle = serve_frames(bind, move |req: NsRequest| r.handle(req))?;
        Ok(NameserverServer { registry, handle })
    }

    pub fn addr(&self) -> SocketAddr {
        self.handle.addr()
    }

    /// Publishes this server's address in the NDS under `nickname`.
    pub fn announce(&self, nds: &NdsClient, nickname: &Alias) -> Result<(), NdsError> {
        nds.put(nickname, &self.addr().to_string())
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn shutdown(&mut self) {
        self.handle.shutdown();
    }
}

#[derive(Debug, Clone)]
pub struct NameserverClient {
    addr: String,
    timeout: Option<Duration>,
}

impl NameserverClient {
    pub fn new(addr: impl Into<String>, timeout: Option<Duration>) -> Self {
        NameserverClient {
            addr: addr.into(),
            timeout,
        }
    }

    pub fn addr(&self) -> &str {
        &self.addr
    }

    fn call(&self, req: &NsRequest) -> Result<NsResponse, NameserverError> {
        // registry calls are quick; never wait forever on a dead nameserver
        let timeout = self.timeout.or(Some(Duration::from_secs(5)));
        exchange(&self.addr, req, timeout).map_err(|e| NameserverError::Io(e.to_string()))
    }

    fn expect_ok(resp: NsResponse) -> Result<(), NameserverError> {
        match resp {
            NsResponse::Ok => Ok(()),
            NsResponse::AliasTaken { alias, endpoint } => {
                Err(NameserverError::AliasTaken { alias, endpoint })
            }
            NsResponse::NotFound { alias } => Err(NameserverError::NotFound(alias)),
            other => Err(NameserverError::Io(format!("unexpected response {other:?}"))),
        }
    }

    pub fn register(&self, alias: &Alias, endpoint: &str) -> Result<(), NameserverError> {
        Self::expect_ok(self.call(&NsRequest::Register {
            alias: alias.clone(),
            endpoint: endpoint.to_owned(),
        })?)
    }

    pub fn unregister(&self, alias: &Alias) -> Result<(), NameserverError> {
        Self::expect_ok(self.call(&NsRequest::Unregister {
            alias: alias.clone(),
        })?)
    }

    pub fn resolve(&self, alias: &Alias) -> Result<String, NameserverError> {
        match self.call(&NsRequest::Resolve {
            alias: alias.clone(),
        })? {
            NsResponse::Endpoint { endpoint } => Ok(endpoint),
            other => Self::expect_ok(other).and(Err(NameserverError::Io("no endpoint".into()))),
        }
    }

    pub fn list(&self) -> Result<BTreeMap<Alias, String>, NameserverError> {
        match self.call(&NsRequest::List)? {
            NsResponse::Entries { entries } => Ok(entries),
            other => Err(NameserverError::Io(format!("unexpected response {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> Alias {
        Alias::new(s).unwrap()
    }

    #[test]
    fn register_resolve_roundtrip() {
        let r = Registry::new();
        r.register(&a("orchestrator"), "127.0.0.1:9000").unwrap();
        assert_eq!(r.resolve(&a("orchestrator")).unwrap(), "127.0.0.1:9000");
        // same endpoint again is fine
        r.register(&a("orchestrator"), "127.0.0.1:9000").unwrap();
    }

    #[test]
    fn alias_taken_and_not_found() {
        let r = Registry::new();
        r.register(&a("orchestrator"), "127.0.0.1:9000").unwrap();
        assert!(matches!(
            r.register(&a("orchestrator"), "127.0.0.1:9001"),
            Err(NameserverError::AliasTaken { .. })
        ));
        assert_eq!(
            r.resolve(&a("ghost")),
            Err(NameserverError::NotFound(a("ghost")))
        );
    }

    #[test]
    fn over_tcp() {
        let mut server = NameserverServer::spawn("127.0.0.1:0").unwrap();
        let client = NameserverClient::new(server.addr().to_string(), None);
        client.register(&a("D1"), "127.0.0.1:1234").unwrap();
        assert_eq!(client.resolve(&a("D1")).unwrap(), "127.0.0.1:1234");
        assert!(matches!(
            client.register(&a("D1"), "127.0.0.1:9"),
            Err(NameserverError::AliasTaken { .. })
        ));
        assert!(matches!(client.resolve(&a("x")), Err(NameserverError::NotFound(_))));
        assert_eq!(client.list().unwrap().len(), 1);
        client.unregister(&a("D1")).unwrap();
        server.shutdown();
        assert!(matches!(client.resolve(&a("D1")), Err(NameserverError::Io(_))));
    }
}
