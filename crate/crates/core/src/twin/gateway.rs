//! HTTP control API plus the WebSocket frame stream. Control is
//! request/response; the stream only ever flows out.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::engine::{RunConfig, RunShared};
use super::{new_run, run_scenario, save, RunStatus, TransportMode};
use crate::alias::Alias;
use crate::messaging::nds::{self, AddressBody, Nds};
use crate::messaging::Envelope;
use crate::scenario::Scenario;

/// NDS nickname the configuration endpoint writes.
pub const NAMESERVER_NICK: &str = "nameserver";

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub run: RunConfig,
    pub transport: TransportMode,
    pub runs_dir: Option<PathBuf>,
    /// Frames a stream reader may fall behind before it is dropped.
    pub max_lag: u64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            run: RunConfig::default(),
            transport: TransportMode::Local,
            runs_dir: None,
            max_lag: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("run {0} is still running")]
    AlreadyRunning(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("no run {0}")]
    UnknownRun(String),
    #[error("run {0} has already finished")]
    Finished(String),
    #[error("{0}")]
    BadRequest(String),
}

impl GatewayError {
    fn code(&self) -> &'static str {
        match self {
            GatewayError::AlreadyRunning(_) => "AlreadyRunning",
            GatewayError::InvalidScenario(_) => "InvalidScenario",
            GatewayError::UnknownRun(_) => "UnknownRun",
            GatewayError::Finished(_) => "Finished",
            GatewayError::BadRequest(_) => "BadRequest",
        }
    }

    fn status(&self) -> StatusCode {
        match self {
            GatewayError::AlreadyRunning(_) | GatewayError::Finished(_) => StatusCode::CONFLICT,
            GatewayError::InvalidScenario(_) | GatewayError::BadRequest(_) => {
                StatusCode::BAD_REQUEST
            }
            GatewayError::UnknownRun(_) => StatusCode::NOT_FOUND,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl IntoResponse for GatewayError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.code().to_owned(),
            message: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunCreated {
    pub run_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub status: RunStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeqMessage {
    pub seq: u64,
    pub envelope: Envelope,
}

/// Known runs and the single active one.
pub struct Gateway {
    config: GatewayConfig,
    nds: Arc<Nds>,
    runs: RwLock<BTreeMap<String, Arc<RunShared>>>,
    active: Mutex<Option<String>>,
}

impl Gateway {
    pub fn new(config: GatewayConfig, nds: Arc<Nds>) -> Arc<Self> {
        Arc::new(Gateway {
            config,
            nds,
            runs: RwLock::default(),
            active: Mutex::default(),
        })
    }

    pub fn nds(&self) -> &Arc<Nds> {
        &self.nds
    }

    pub fn run(&self, id: &str) -> Result<Arc<RunShared>, GatewayError> {
        self.runs
            .read()
            .expect("run table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| GatewayError::UnknownRun(id.to_owned()))
    }

    pub fn runs(&self) -> Vec<RunSummary> {
        self.runs
            .read()
            .expect("run table poisoned")
            .values()
            .map(|r| RunSummary {
                run_id: r.run_id.clone(),
                status: r.status(),
            })
            .collect()
    }

    fn busy(&self, active: &Option<String>) -> Option<String> {
        let id = active.as_ref()?;
        let run = self.run(id).ok()?;
        (!run.status().is_terminal()).then(|| id.clone())
    }

    /// Makes a run started elsewhere (e.g. by the CLI) observable.
    pub fn attach(&self, shared: Arc<RunShared>) {
        let id = shared.run_id.clone();
        self.runs
            .write()
            .expect("run table poisoned")
            .insert(id.clone(), shared);
        *self.active.lock().expect("active poisoned") = Some(id);
    }

    /// Validates `scenario_json` and runs it on a background thread.
    pub fn start_run(self: &Arc<Self>, scenario_json: &str) -> Result<String, GatewayError> {
        let mut active = self.active.lock().expect("active poisoned");
        if let Some(id) = self.busy(&active) {
            return Err(GatewayError::AlreadyRunning(id));
        }
        let scenario = Scenario::from_json(scenario_json)
            .map_err(|e| GatewayError::InvalidScenario(e.to_string()))?;
        let mut shared = new_run(&scenario, self.config.run.seed);
        {
            let mut runs = self.runs.write().expect("run table poisoned");
            let base = shared.run_id.clone();
            let mut n = 1;
            while runs.contains_key(&shared.run_id) {
                n += 1;
                let mut rec = shared.record();
                rec.run_id = format!("{base}-{n}");
                shared = RunShared::new(rec);
            }
            runs.insert(shared.run_id.clone(), shared.clone());
        }
        let id = shared.run_id.clone();
        *active = Some(id.clone());
        drop(active);

        let gw = self.clone();
        std::thread::Builder::new()
            .name(format!("run-{id}"))
            .spawn(move || {
                let art = run_scenario(&scenario, &gw.config.run, &gw.config.transport, shared);
                if let Some(dir) = &gw.config.runs_dir {
                    let _ = save(dir, &scenario, &art.shared);
                }
            })
            .map_err(|e| GatewayError::BadRequest(e.to_string()))?;
        Ok(id)
    }

    pub fn abort(&self, id: &str) -> Result<(), GatewayError> {
        let run = self.run(id)?;
        if run.status().is_terminal() {
            return Err(GatewayError::Finished(id.to_owned()));
        }
        run.abort();
        Ok(())
    }
}

#[derive(Debug, Default, Deserialize)]
struct SinceQuery {
    #[serde(default)]
    since: u64,
}

async fn create_run(State(gw): State<Arc<Gateway>>, body: String) -> Response {
    match gw.start_run(&body) {
        Ok(run_id) => (StatusCode::CREATED, Json(RunCreated { run_id })).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn list_runs(State(gw): State<Arc<Gateway>>) -> Json<Vec<RunSummary>> {
    Json(gw.runs())
}

async fn get_run(State(gw): State<Arc<Gateway>>, Path(id): Path<String>) -> Response {
    match gw.run(&id) {
        Ok(r) => Json(r.record()).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn get_state(State(gw): State<Arc<Gateway>>, Path(id): Path<String>) -> Response {
    match gw.run(&id) {
        Ok(r) => Json(r.snapshot()).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn get_messages(
    State(gw): State<Arc<Gateway>>,
    Path(id): Path<String>,
    Query(q): Query<SinceQuery>,
) -> Response {
    match gw.run(&id) {
        Ok(r) => {
            let out: Vec<SeqMessage> = r
                .frames
                .messages_since(q.since)
                .into_iter()
                .map(|(seq, envelope)| SeqMessage { seq, envelope })
                .collect();
            Json(out).into_response()
        }
        Err(e) => e.into_response(),
    }
}

async fn abort_run(State(gw): State<Arc<Gateway>>, Path(id): Path<String>) -> Response {
    match gw.abort(&id) {
        Ok(()) => StatusCode::ACCEPTED.into_response(),
        Err(e) => e.into_response(),
    }
}

fn nameserver_nick() -> Alias {
    Alias::new(NAMESERVER_NICK).expect("valid alias")
}

async fn set_nds_config(State(gw): State<Arc<Gateway>>, body: String) -> Response {
    let parsed: AddressBody = match serde_json::from_str(&body) {
        Ok(b) => b,
        Err(e) => return GatewayError::BadRequest(e.to_string()).into_response(),
    };
    match gw.nds.put(&nameserver_nick(), &parsed.address) {
        Ok(()) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => GatewayError::BadRequest(e.to_string()).into_response(),
    }
}

async fn get_nds_config(State(gw): State<Arc<Gateway>>) -> Response {
    match gw.nds.lookup(&nameserver_nick()) {
        Ok(address) => Json(AddressBody { address }).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn ws_run(
    State(gw): State<Arc<Gateway>>,
    Path(id): Path<String>,
    Query(q): Query<SinceQuery>,
    ws: WebSocketUpgrade,
) -> Response {
    let run = match gw.run(&id) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    let max_lag = gw.config.max_lag;
    ws.on_upgrade(move |socket| stream_frames(socket, run, q.since, max_lag))
}

/// Close code sent to a reader that fell too far behind.
pub const LAGGING_CLOSE_CODE: u16 = 4008;

async fn stream_frames(mut socket: WebSocket, run: Arc<RunShared>, mut cursor: u64, max_lag: u64) {
    let mut rx = run.frames.subscribe();
    loop {
        rx.borrow_and_update();
        let batch = run.frames.since(cursor, 512);
        if batch.is_empty() {
            if run.frames.is_closed() {
                // closed is set only after the final push
                if run.frames.since(cursor, 1).is_empty() {
                    break;
                }
                continue;
            }
            tokio::select! {
                changed = rx.changed() => if changed.is_err() { break },
                incoming = socket.recv() => match incoming {
                    None | Some(Err(_)) | Some(Ok(Message::Close(_))) => return,
                    Some(Ok(_)) => {}
                },
            }
            continue;
        }
        for frame in batch {
            if run.frames.last_seq().saturating_sub(frame.seq) > max_lag {
                let close = axum::extract::ws::CloseFrame {
                    code: LAGGING_CLOSE_CODE,
                    reason: "reader fell behind".into(),
                };
                let _ = socket.send(Message::Close(Some(close))).await;
                return;
            }
            let text = serde_json::to_string(&frame).expect("frames serialise");
            if socket.send(Message::Text(text.into())).await.is_err() {
                return;
            }
            cursor = frame.seq;
        }
    }
    let done = axum::extract::ws::CloseFrame {
        code: axum::extract::ws::close_code::NORMAL,
        reason: "run finished".into(),
    };
    let _ = socket.send(Message::Close(Some(done))).await;
}

pub fn router(gw: Arc<Gateway>) -> Router {
    let nds_routes = nds::router(gw.nds.clone());
    Router::new()
        .route("/api/runs", post(create_run).get(list_runs))
        .route("/api/runs/{id}", get(get_run))
        .route("/api/runs/{id}/state", get(get_state))
        .route("/api/runs/{id}/messages", get(get_messages))
        .route("/api/runs/{id}/abort", post(abort_run))
        .route("/api/nds-config", post(set_nds_config).get(get_nds_config))
        .route("/ws/runs/{id}", get(ws_run))
        .with_state(gw)
        .merge(nds_routes)
}
