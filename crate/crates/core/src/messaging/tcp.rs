//! Networked deployment: agent endpoints over TCP, resolved through the
//! nameserver, which is itself located through the NDS.

use std::collections::HashMap;
use std::io;
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::bus::{Bus, SharedHandler, Transport};
use super::envelope::Envelope;
use super::nameserver::NameserverClient;
use super::nds::NdsClient;
use super::wire::{read_frame, write_frame};
use super::{MessagingError, NameserverError};
use crate::alias::Alias;

/// A running frame server; stops on [`ServerHandle::shutdown`] or drop.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    conns: Arc<Mutex<HashMap<u64, TcpStream>>>,
    join: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(&mut self) {
        if self.stop.swap(true, Ordering::SeqCst) {
            return;
        }
        // wake the accept loop
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_millis(200));
        for (_, s) in self.conns.lock().expect("conn table poisoned").drain() {
            let _ = s.shutdown(Shutdown::Both);
        }
        if let Some(j) = self.join.take() {
            let _ = j.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Serves length-prefixed JSON request/response pairs; each connection may
/// carry any number of requests.
pub fn serve_frames<Req, Resp, F>(bind: &str, handler: F) -> io::Result<ServerHandle>
where
    Req: DeserializeOwned + Send + 'static,
    Resp: Serialize + Send + 'static,
    F: Fn(Req) -> Resp + Send + Sync + 'static,
{
    let listener = TcpListener::bind(bind)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let conns: Arc<Mutex<HashMap<u64, TcpStream>>> = Arc::default();
    let handler = Arc::new(handler);
    let join = {
        let stop = stop.clone();
        let conns = conns.clone();
        std::thread::Builder::new()
            .name(format!("frames-{addr}"))
            .spawn(move || {
                let ids = AtomicU64::new(0);
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let id = ids.fetch_add(1, Ordering::Relaxed);
                    if let Ok(clone) = stream.try_clone() {
                        conns.lock().expect("conn table poisoned").insert(id, clone);
                    }
                    let handler = handler.clone();
                    let conns = conns.clone();
                    std::thread::spawn(move || {
                        let mut stream = stream;
                        while let Ok(Some(req)) = read_frame::<_, Req>(&mut stream) {
                            let resp = handler(req);
                            if write_frame(&mut stream, &resp).is_err() {
                                break;
                            }
                        }
                        conns.lock().expect("conn table poisoned").remove(&id);
                    });
                }
            })?
    };
    Ok(ServerHandle {
        addr,
        stop,
        conns,
        join: Some(join),
    })
}

/// One request/response exchange on a fresh connection.
pub fn exchange<Req: Serialize, Resp: DeserializeOwned>(
    addr: &str,
    request: &Req,
    timeout: Option<Duration>,
) -> io::Result<Resp> {
    let target = addr
        .to_socket_addrs()?
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, format!("cannot resolve {addr}")))?;
    let mut stream = match timeout {
        Some(t) => TcpStream::connect_timeout(&target, t)?,
        None => TcpStream::connect(target)?,
    };
    stream.set_read_timeout(timeout)?;
    stream.set_write_timeout(timeout)?;
    stream.set_nodelay(true)?;
    write_frame(&mut stream, request)?;
    read_frame(&mut stream)?
        .ok_or_else(|| io::Error::new(io::ErrorKind::UnexpectedEof, "connection closed before reply"))
}

fn is_timeout(e: &io::Error) -> bool {
    matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut)
}

/// An agent reachable at a TCP endpoint.
pub struct AgentServer {
    alias: Alias,
    handle: ServerHandle,
}

impl AgentServer {
    /// `bus` is used for replies and any requests the handler makes.
    pub fn spawn(bind: &str, alias: Alias, handler: SharedHandler, bus: Bus) -> io::Result<Self> {
        let handle = serve_frames(bind, move |req: Envelope| bus.dispatch(&handler, &req))?;
        Ok(AgentServer { alias, handle })
    }

    pub fn alias(&self) -> &Alias {
        &self.alias
    }

    pub fn addr(&self) -> SocketAddr {
        self.handle.addr()
    }

    pub fn endpoint(&self) -> String {
        self.handle.addr().to_string()
    }

    pub fn shutdown(&mut self) {
        self.handle.shutdown();
    }
}

/// Looks agents up through the nameserver found at `nameserver` in the NDS.
pub struct Resolver {
    nds: NdsClient,
    nameserver: Alias,
    ns_addr: Mutex<Option<String>>,
    timeout: Option<Duration>,
}

impl Resolver {
    pub fn new(nds: NdsClient, nameserver: Alias, timeout: Option<Duration>) -> Self {
        Resolver {
            nds,
            nameserver,
            ns_addr: Mutex::new(None),
            timeout,
        }
    }

    /// Current nameserver client, from cache or a fresh NDS lookup.
    pub fn nameserver(&self, refresh: bool) -> Result<NameserverClient, MessagingError> {
        let mut cached = self.ns_addr.lock().expect("resolver poisoned");
        if refresh || cached.is_none() {
            *cached = Some(self.nds.lookup(&self.nameserver)?);
        }
        let addr = cached.clone().expect("set above");
        Ok(NameserverClient::new(addr, self.timeout))
    }

    fn with_nameserver<T>(
        &self,
        f: impl Fn(&NameserverClient) -> Result<T, NameserverError>,
    ) -> Result<T, MessagingError> {
        match f(&self.nameserver(false)?) {
            Err(NameserverError::Io(_)) => Ok(f(&self.nameserver(true)?)?),
            other => Ok(other?),
        }
    }

    pub fn resolve(&self, alias: &Alias) -> Result<String, MessagingError> {
        match self.with_nameserver(|ns| ns.resolve(alias)) {
            Err(MessagingError::Nameserver(NameserverError::NotFound(a))) => {
                Err(MessagingError::Unresolvable(a))
            }
            other => other,
        }
    }

    pub fn register(&self, alias: &Alias, endpoint: &str) -> Result<(), MessagingError> {
        self.with_nameserver(|ns| ns.register(alias, endpoint))
    }

    pub fn unregister(&self, alias: &Alias) -> Result<(), MessagingError> {
        self.with_nameserver(|ns| ns.unregister(alias))
    }
}

/// Delivers over TCP. Resolutions are cached until a send fails, then
/// re-resolved once.
pub struct TcpTransport {
    resolver: Arc<Resolver>,
    timeout: Option<Duration>,
    patience: Duration,
    cache: Mutex<HashMap<Alias, String>>,
}

impl TcpTransport {
    pub fn new(resolver: Arc<Resolver>, timeout: Option<Duration>) -> Self {
        TcpTransport {
            resolver,
            timeout,
            patience: Duration::ZERO,
            cache: Mutex::default(),
        }
    }

    /// How long a failed lookup keeps being retried, covering the gap while
    /// agents re-register with a restarted nameserver.
    pub fn with_patience(mut self, patience: Duration) -> Self {
        self.patience = patience;
        self
    }

    pub fn clear_cache(&self) {
        self.cache.lock().expect("cache poisoned").clear();
    }

    fn endpoint(&self, alias: &Alias, refresh: bool) -> Result<String, MessagingError> {
        if !refresh {
            if let Some(addr) = self.cache.lock().expect("cache poisoned").get(alias) {
                return Ok(addr.clone());
            }
        }
        let deadline = std::time::Instant::now() + self.patience;
        let addr = loop {
            match self.resolver.resolve(alias) {
                Ok(addr) => break addr,
                Err(
                    MessagingError::Unresolvable(_)
                    | MessagingError::Nameserver(_)
                    | MessagingError::Nds(_),
                ) if std::time::Instant::now() < deadline => {
                    std::thread::sleep(Duration::from_millis(25));
                }
                Err(e) => return Err(e),
            }
        };
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(alias.clone(), addr.clone());
        Ok(addr)
    }
}

impl Transport for TcpTransport {
    fn deliver(&self, request: &Envelope, _bus: &Bus) -> Result<Envelope, MessagingError> {
        let mut refresh = false;
        loop {
            let addr = self.endpoint(&request.recipient, refresh)?;
            match exchange::<_, Envelope>(&addr, request, self.timeout) {
                Ok(reply) => return Ok(reply),
                Err(e) if is_timeout(&e) => {
                    return Err(MessagingError::Timeout(request.recipient.clone()))
                }
                Err(_) if !refresh => {
                    self.cache.lock().expect("cache poisoned").remove(&request.recipient);
                    refresh = true;
                }
                Err(e) => return Err(MessagingError::Transport(e.to_string())),
            }
        }
    }
}
