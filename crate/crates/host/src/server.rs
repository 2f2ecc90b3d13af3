//! HTTP study host.
//!
//! | method | path                     | body                         |
//! |--------|--------------------------|------------------------------|
//! | POST   | `/study/{id}/session`    | none                         |
//! | GET    | `/session/{p}/view`      | none                         |
//! | POST   | `/session/{p}/events`    | `{"batch": n, "events": []}` |
//! | POST   | `/session/{p}/confirm`   | none                         |
//! | POST   | `/session/{p}/skip`      | none                         |
//! | GET    | `/healthz`               | none                         |
//!
//! Every request on a session runs under that session's lock, so commands
//! of one participant are applied one at a time in arrival order.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use circuitlab_core::engine::{Command, Session};
use circuitlab_core::view::ParticipantView;
use circuitlab_core::{Event, EventRecord, Millis, Pseudonym};

use crate::store::{repair_log, SessionLog, Store, StoreError};
use crate::study::Study;

/// Largest number of commands accepted in one batch.
pub const MAX_BATCH: usize = 500;

pub trait Clock: Send + Sync {
    fn now(&self) -> Millis;
}

/// Milliseconds since the Unix epoch.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Millis {
        let d = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default();
        Millis(d.as_millis() as u64)
    }
}

/// A clock moved by hand, for tests and simulations.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start: Millis) -> Self {
        ManualClock(AtomicU64::new(start.0))
    }

    pub fn set(&self, t: Millis) {
        self.0.store(t.0, Ordering::SeqCst);
    }

    pub fn advance(&self, by: Millis) {
        self.0.fetch_add(by.0, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Millis {
        Millis(self.0.load(Ordering::SeqCst))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CommandResult {
    Applied { seq: u64, event: Event },
    Rejected { error: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchRequest {
    pub batch: u64,
    pub events: Vec<Command>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchResponse {
    pub batch: u64,
    /// Set when the batch id was already processed; nothing was applied.
    pub duplicate: bool,
    pub results: Vec<CommandResult>,
    pub view: ParticipantView,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandResponse {
    pub result: CommandResult,
    pub view: ParticipantView,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub pseudonym: Pseudonym,
    pub view: ParticipantView,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("unknown study {0}")]
    UnknownStudy(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{0}")]
    Engine(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::UnknownStudy(_) | ApiError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ApiError::Engine(_) => StatusCode::CONFLICT,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %self, "request failed");
        }
        (
            status,
            Json(ErrorBody {
                error: self.to_string(),
            }),
        )
            .into_response()
    }
}

/// A session with its log and request bookkeeping.
#[derive(Debug)]
pub struct LiveSession {
    pub session: Session,
    log: SessionLog,
    next_seq: u64,
    last_batch: Option<u64>,
    last_response: Option<BatchResponse>,
}

impl LiveSession {
    fn record(&mut self, event: Event, at: Millis, batch: Option<u64>) -> Result<u64, StoreError> {
        let seq = self.next_seq;
        let rec = EventRecord {
            seq,
            server_time: at,
            pseudonym: self.session.state().pseudonym,
            batch,
            event,
        };
        self.log.append(&rec)?;
        self.next_seq += 1;
        Ok(seq)
    }

    fn tick(&mut self, now: Millis) -> Result<(), StoreError> {
        if let Some(ev) = self.session.tick(now) {
            self.record(ev, now, None)?;
        }
        Ok(())
    }

    fn run(
        &mut self,
        cmd: &Command,
        now: Millis,
        batch: Option<u64>,
    ) -> Result<CommandResult, StoreError> {
        Ok(match self.session.apply(cmd, now) {
            Ok(event) => {
                let seq = self.record(event.clone(), now, batch)?;
                CommandResult::Applied { seq, event }
            }
            Err(e) => CommandResult::Rejected {
                error: e.to_string(),
            },
        })
    }
}

/// Outcome of loading existing logs at startup.
#[derive(Debug, Default)]
pub struct RecoveryReport {
    pub recovered: Vec<Pseudonym>,
    pub skipped: Vec<(PathBuf, String)>,
}

pub struct Host {
    studies: BTreeMap<String, Study>,
    store: Store,
    clock: Arc<dyn Clock>,
    sessions: RwLock<HashMap<Pseudonym, Arc<Mutex<LiveSession>>>>,
}

impl Host {
    pub fn new(studies: BTreeMap<String, Study>, store: Store, clock: Arc<dyn Clock>) -> Self {
        Host {
            studies,
            store,
            clock,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map lock").len()
    }

    /// Rebuilds every session found in the store by replaying its log.
    /// Sessions whose time limit passed while the host was down end with a
    /// timeout record.
    pub fn recover(&self) -> Result<RecoveryReport, StoreError> {
        let mut report = RecoveryReport::default();
        let now = self.clock.now();
        for path in self.store.log_files()? {
            match self.recover_one(&path, now) {
                Ok(p) => report.recovered.push(p),
                Err(reason) => {
                    tracing::warn!(path = %path.display(), %reason, "session not recovered");
                    report.skipped.push((path, reason));
                }
            }
        }
        Ok(report)
    }

    fn recover_one(&self, path: &std::path::Path, now: Millis) -> Result<Pseudonym, String> {
        let loaded = repair_log(path).map_err(|e| e.to_string())?;
        let first = loaded.records.first().ok_or("log is empty")?;
        let Event::SessionCreated { study, .. } = &first.event else {
            return Err("log does not start with session creation".into());
        };
        let study = self
            .studies
            .get(study)
            .ok_or_else(|| format!("unknown study {study}"))?;
        let session = Session::replay(Arc::clone(&study.content), &loaded.records)
            .map_err(|e| e.to_string())?;
        let pseudonym = first.pseudonym;
        let log = self.store.open_log(pseudonym).map_err(|e| e.to_string())?;
        let last = loaded.records.last().expect("non-empty");
        let mut live = LiveSession {
            session,
            log,
            next_seq: last.seq + 1,
            last_batch: loaded.records.iter().filter_map(|r| r.batch).max(),
            last_response: None,
        };
        live.tick(now.max(last.server_time))
            .map_err(|e| e.to_string())?;
        self.sessions
            .write()
            .expect("session map lock")
            .insert(pseudonym, Arc::new(Mutex::new(live)));
        Ok(pseudonym)
    }

    pub fn create_session(&self, study_id: &str) -> Result<CreatedSession, ApiError> {
        let study = self
            .studies
            .get(study_id)
            .ok_or_else(|| ApiError::UnknownStudy(study_id.to_string()))?;
        let pseudonym = Pseudonym(rand::random());
        let seed: u64 = rand::random();
        let now = self.clock.now();
        let (session, event) = Session::create(
            Arc::clone(&study.content),
            study.config.clone(),
            study_id,
            pseudonym,
            seed,
            now,
        )
        .map_err(|e| ApiError::Engine(e.to_string()))?;
        let log = self.store.create_log(pseudonym)?;
        let mut live = LiveSession {
            session,
            log,
            next_seq: 0,
            last_batch: None,
            last_response: None,
        };
        live.record(event, now, None)?;
        let view = live.session.view(now);
        self.sessions
            .write()
            .expect("session map lock")
            .insert(pseudonym, Arc::new(Mutex::new(live)));
        Ok(CreatedSession { pseudonym, view })
    }

    pub fn session(&self, p: &str) -> Result<Arc<Mutex<LiveSession>>, ApiError> {
        let unknown = || ApiError::UnknownSession(p.to_string());
        let pseudonym: Pseudonym = p.parse().map_err(|_| unknown())?;
        self.sessions
            .read()
            .expect("session map lock")
            .get(&pseudonym)
            .cloned()
            .ok_or_else(unknown)
    }

    pub async fn view(&self, p: &str) -> Result<ParticipantView, ApiError> {
        let s = self.session(p)?;
        let mut live = s.lock().await;
        let now = self.clock.now();
        live.tick(now)?;
        Ok(live.session.view(now))
    }

    pub async fn batch(&self, p: &str, req: BatchRequest) -> Result<BatchResponse, ApiError> {
        if req.events.len() > MAX_BATCH {
            return Err(ApiError::BadRequest(format!(
                "batch holds {} commands, the limit is {MAX_BATCH}",
                req.events.len()
            )));
        }
        let s = self.session(p)?;
        let mut live = s.lock().await;
        let now = self.clock.now();
        live.tick(now)?;
        if live.last_batch.is_some_and(|b| req.batch <= b) {
            if let Some(cached) = live.last_response.as_ref().filter(|r| r.batch == req.batch) {
                return Ok(cached.clone());
            }
            return Ok(BatchResponse {
                batch: req.batch,
                duplicate: true,
                results: Vec::new(),
                view: live.session.view(now),
            });
        }
        let mut results = Vec::with_capacity(req.events.len());
        for cmd in &req.events {
            results.push(live.run(cmd, now, Some(req.batch))?);
        }
        let response = BatchResponse {
            batch: req.batch,
            duplicate: false,
            results,
            view: live.session.view(now),
        };
        live.last_batch = Some(req.batch);
        live.last_response = Some(response.clone());
        Ok(response)
    }

    pub async fn command(
        &self,
        p: &str,
        cmd: Command,
    ) -> Result<(bool, CommandResponse), ApiError> {
        let s = self.session(p)?;
        let mut live = s.lock().await;
        let now = self.clock.now();
        live.tick(now)?;
        let result = live.run(&cmd, now, None)?;
        let applied = matches!(result, CommandResult::Applied { .. });
        Ok((
            applied,
            CommandResponse {
                result,
                view: live.session.view(now),
            },
        ))
    }
}

type Shared = Arc<Host>;

async fn create_session(
    State(host): State<Shared>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ApiError> {
    Ok((StatusCode::CREATED, Json(host.create_session(&id)?)))
}

async fn view(
    State(host): State<Shared>,
    Path(p): Path<String>,
) -> Result<Json<ParticipantView>, ApiError> {
    Ok(Json(host.view(&p).await?))
}

async fn events(
    State(host): State<Shared>,
    Path(p): Path<String>,
    body: Result<Json<BatchRequest>, JsonRejection>,
) -> Result<Json<BatchResponse>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    Ok(Json(host.batch(&p, req).await?))
}

async fn single(host: Shared, p: String, cmd: Command) -> Result<Response, ApiError> {
    let (applied, body) = host.command(&p, cmd).await?;
    let status = if applied {
        StatusCode::OK
    } else {
        StatusCode::CONFLICT
    };
    Ok((status, Json(body)).into_response())
}

async fn confirm(State(host): State<Shared>, Path(p): Path<String>) -> Result<Response, ApiError> {
    single(host, p, Command::Confirm).await
}

async fn skip(State(host): State<Shared>, Path(p): Path<String>) -> Result<Response, ApiError> {
    single(host, p, Command::Skip).await
}

async fn healthz() -> &'static str {
    "ok"
}

pub fn router(host: Shared) -> Router {
    Router::new()
        .route("/study/{id}/session", post(create_session))
        .route("/session/{p}/view", get(view))
        .route("/session/{p}/events", post(events))
        .route("/session/{p}/confirm", post(confirm))
        .route("/session/{p}/skip", post(skip))
        .route("/healthz", get(healthz))
        .with_state(host)
}
