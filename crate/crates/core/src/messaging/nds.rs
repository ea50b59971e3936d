//! Nickname → address phonebook. Survives nameserver restarts by
//! persisting every write to a single JSON file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::NdsError;
use crate::alias::Alias;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NdsEntry {
    pub nickname: Alias,
    pub address: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AddressBody {
    pub address: String,
}

/// Accepts `host:port` with a non-empty host and a numeric port.
pub fn check_address(address: &str) -> Result<(), NdsError> {
    let bad = || NdsError::InvalidAddress(address.to_owned());
    let (host, port) = address.rsplit_once(':').ok_or_else(bad)?;
    if host.is_empty() || host.chars().any(char::is_whitespace) {
        return Err(bad());
    }
    port.parse::<u16>().map_err(|_| bad())?;
    Ok(())
}

#[derive(Debug, Default)]
pub struct Nds {
    path: Option<PathBuf>,
    entries: RwLock<BTreeMap<Alias, String>>,
}

impl Nds {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads `path` if it exists; later writes go back to it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, NdsError> {
        let path = path.as_ref().to_path_buf();
        let entries = match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| NdsError::Io(e.to_string()))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(NdsError::Io(e.to_string())),
        };
        Ok(Nds {
            path: Some(path),
            entries: RwLock::new(entries),
        })
    }

    pub fn put(&self, nickname: &Alias, address: &str) -> Result<(), NdsError> {
        check_address(address)?;
        let mut entries = self.entries.write().expect("nds poisoned");
        entries.insert(nickname.clone(), address.to_owned());
        if let Some(path) = &self.path {
            persist(path, &entries)?;
        }
        Ok(())
    }

    pub fn lookup(&self, nickname: &Alias) -> Result<String, NdsError> {
        self.entries
            .read()
            .expect("nds poisoned")
            .get(nickname)
            .cloned()
            .ok_or_else(|| NdsError::NotFound(nickname.clone()))
    }

    pub fn entries(&self) -> BTreeMap<Alias, String> {
        self.entries.read().expect("nds poisoned").clone()
    }
}

// write-then-rename so a crash never leaves a torn file
fn persist(path: &Path, entries: &BTreeMap<Alias, String>) -> Result<(), NdsError> {
    let io = |e: std::io::Error| NdsError::Io(e.to_string());
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = path.with_extension("tmp");
    let text = serde_json::to_string_pretty(entries).expect("string map serialises");
    fs::write(&tmp, text).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

async fn get_entry(State(nds): State<Arc<Nds>>, UrlPath(nick): UrlPath<String>) -> Response {
    let Ok(alias) = Alias::new(&nick) else {
        return StatusCode::NOT_FOUND.into_response();
    };
    match nds.lookup(&alias) {
        Ok(address) => Json(AddressBody { address }).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn put_entry(
    State(nds): State<Arc<Nds>>,
    UrlPath(nick): UrlPath<String>,
    Json(body): Json<AddressBody>,
) -> Response {
    let Ok(alias) = Alias::new(&nick) else {
        return (StatusCode::BAD_REQUEST, "invalid nickname").into_response();
    };
    match nds.put(&alias, &body.address) {
        Ok(()) => StatusCode::NO_CONTENT.into_response(),
        Err(e @ NdsError::InvalidAddress(_)) => {
            (StatusCode::BAD_REQUEST, e.to_string()).into_response()
        }
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

pub fn router(nds: Arc<Nds>) -> Router {
    Router::new()
        .route("/nds/entries/{nickname}", get(get_entry).put(put_entry))
        .with_state(nds)
}

/// Blocking HTTP client for a remote NDS.
#[derive(Clone)]
pub struct NdsClient {
    base: String,
    agent: ureq::Agent,
}

impl std::fmt::Debug for NdsClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NdsClient").field("base", &self.base).finish()
    }
}

impl NdsClient {
    /// `base` is e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(5)))
            .http_status_as_error(false)
            .build()
            .into();
        NdsClient {
            base: base.into().trim_end_matches('/').to_owned(),
            agent,
        }
    }

    fn url(&self, nickname: &Alias) -> String {
        format!("{}/nds/entries/{nickname}", self.base)
    }

    pub fn put(&self, nickname: &Alias, address: &str) -> Result<(), NdsError> {
        let resp = self
            .agent
            .put(&self.url(nickname))
            .send_json(AddressBody {
                address: address.to_owned(),
            })
            .map_err(|e| NdsError::Http(e.to_string()))?;
        match resp.status().as_u16() {
            204 | 200 => Ok(()),
            400 => Err(NdsError::InvalidAddress(address.to_owned())),
            s => Err(NdsError::Http(format!("status {s}"))),
        }
    }

    pub fn lookup(&self, nickname: &Alias) -> Result<String, NdsError> {
        let mut resp = self
            .agent
            .get(&self.url(nickname))
            .call()
            .map_err(|e| NdsError::Http(e.to_string()))?;
        match resp.status().as_u16() {
            200 => {
                let body: AddressBody = resp
                    .body_mut()
                    .read_json()
                    .map_err(|e| NdsError::Http(e.to_string()))?;
                Ok(body.address)
            }
            404 => Err(NdsError::NotFound(nickname.clone())),
            s => Err(NdsError::Http(format!("status {s}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::messaging::http::HttpServer;
    use proptest::prelude::*;

    fn a(s: &str) -> Alias {
        Alias::new(s).unwrap()
    }

    #[test]
    fn put_lookup_and_overwrite() {
        let nds = Nds::in_memory();
        nds.put(&a("ns-main"), "10.0.0.5:28000").unwrap();
        assert_eq!(nds.lookup(&a("ns-main")).unwrap(), "10.0.0.5:28000");
        nds.put(&a("ns-main"), "10.0.0.6:28001").unwrap();
        assert_eq!(nds.lookup(&a("ns-main")).unwrap(), "10.0.0.6:28001");
        assert_eq!(nds.lookup(&a("absent")), Err(NdsError::NotFound(a("absent"))));
    }

    #[test]
    fn rejects_bad_addresses() {
        for bad in ["", "host", ":80", "host:", "host:99999", "a b:1"] {
            assert!(check_address(bad).is_err(), "{bad}");
        }
        check_address("localhost:8080").unwrap();
        check_address("[::1]:8080").unwrap();
    }

    #[test]
    fn survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nds.json");
        Nds::open(&path).unwrap().put(&a("nameserver"), "127.0.0.1:1").unwrap();
        assert_eq!(
            Nds::open(&path).unwrap().lookup(&a("nameserver")).unwrap(),
            "127.0.0.1:1"
        );
    }

    #[test]
    fn http_roundtrip() {
        let nds = Arc::new(Nds::in_memory());
        let server = HttpServer::spawn("127.0.0.1:0", router(nds.clone())).unwrap();
        let client = NdsClient::new(server.url());
        client.put(&a("ns-main"), "10.0.0.5:28000").unwrap();
        assert_eq!(client.lookup(&a("ns-main")).unwrap(), "10.0.0.5:28000");
        assert_eq!(client.lookup(&a("absent")), Err(NdsError::NotFound(a("absent"))));
        assert!(matches!(
            client.put(&a("x"), "nope"),
            Err(NdsError::InvalidAddress(_))
        ));
        assert_eq!(nds.entries().len(), 1);
    }

    proptest! {
        #[test]
        fn last_write_per_key(ops in prop::collection::vec((0usize..4, 1u16..5000), 0..40)) {
            let nds = Nds::in_memory();
            let mut oracle = std::collections::HashMap::new();
            for (k, port) in ops {
                let key = format!("k{k}");
                let addr = format!("127.0.0.1:{port}");
                nds.put(&a(&key), &addr).unwrap();
                oracle.insert(key, addr);
            }
            let got: std::collections::HashMap<String, String> = nds
                .entries()
                .into_iter()
                .map(|(k, v)| (k.as_str().to_owned(), v))
                .collect();
            prop_assert_eq!(got, oracle);
        }
    }
}
