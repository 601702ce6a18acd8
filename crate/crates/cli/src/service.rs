//! Local HTTP/JSON adapter over engine sessions.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use varna_core::engine::{Candidate, EngineConfig, Session, Source};
use varna_core::lexicon::Model;

use crate::commands::parse_mode;

pub struct AppState {
    models: HashMap<String, Arc<Model>>,
    config: EngineConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl AppState {
    /// Models are keyed by their language id; a later model with the same
    /// id replaces an earlier one.
    pub fn new(models: impl IntoIterator<Item = Arc<Model>>, config: EngineConfig) -> AppState {
        AppState {
            models: models.into_iter().map(|m| (m.language.clone(), m)).collect(),
            config,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .lock()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session {id:?}")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> ApiError {
        ApiError {
            status: StatusCode::NOT_FOUND,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.message}))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub language: String,
    pub mode: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyRequest {
    pub key: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommitRequest {
    pub surface: String,
}

#[derive(Debug, Deserialize)]
pub struct PredictQuery {
    pub k: Option<usize>,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct CandidateView {
    pub surface: String,
    pub score: f64,
    pub source: Source,
}

impl From<&Candidate> for CandidateView {
    fn from(c: &Candidate) -> Self {
        CandidateView {
            surface: c.surface.clone(),
            score: c.score,
            source: c.source,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ComposeView {
    pub composing: String,
    pub preview: Option<String>,
    pub candidates: Vec<CandidateView>,
}

impl ComposeView {
    pub fn of(session: &Session) -> ComposeView {
        ComposeView {
            composing: session.composing().to_string(),
            preview: session.preview().map(str::to_string),
            candidates: session.candidates().iter().map(CandidateView::from).collect(),
        }
    }
}

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, ApiError>;

async fn health(State(st): State<Shared>) -> Json<serde_json::Value> {
    let mut languages: Vec<&str> = st.models.keys().map(String::as_str).collect();
    languages.sort_unstable();
    Json(json!({"status": "ok", "languages": languages}))
}

async fn layout(State(st): State<Shared>, Path(language): Path<String>) -> ApiResult<Response> {
    let layout = st
        .models
        .get(&language)
        .and_then(|m| m.script.layout())
        .ok_or_else(|| ApiError::not_found(format!("no native layout loaded for {language:?}")))?;
    Ok((
        [(header::CONTENT_TYPE, "application/json")],
        layout.source_json().to_string(),
    )
        .into_response())
}

async fn create_session(
    State(st): State<Shared>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let Json(req) = body?;
    let model = st
        .models
        .get(&req.language)
        .ok_or_else(|| ApiError::bad_request(format!("no model loaded for language {:?}", req.language)))?;
    let mode = parse_mode(&req.mode).map_err(ApiError::bad_request)?;
    let session = Session::new(model.clone(), mode, st.config).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let id = format!("s{}", st.next_id.fetch_add(1, Ordering::Relaxed));
    st.sessions
        .lock()
        .expect("session table poisoned")
        .insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(json!({"sessionId": id}))))
}

async fn key(
    State(st): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<KeyRequest>, JsonRejection>,
) -> ApiResult<Json<ComposeView>> {
    let session = st.session(&id)?;
    let Json(req) = body?;
    let mut chars = req.key.chars();
    let (Some(k), None) = (chars.next(), chars.next()) else {
        return Err(ApiError::bad_request("key must be exactly one character"));
    };
    let mut s = session.lock().expect("session poisoned");
    s.press_key(k).map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(Json(ComposeView::of(&s)))
}

async fn backspace(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<ComposeView>> {
    let session = st.session(&id)?;
    let mut s = session.lock().expect("session poisoned");
    s.backspace();
    Ok(Json(ComposeView::of(&s)))
}

async fn commit(
    State(st): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<CommitRequest>, JsonRejection>,
) -> ApiResult<Json<serde_json::Value>> {
    let session = st.session(&id)?;
    let Json(req) = body?;
    if req.surface.trim().is_empty() || req.surface.chars().any(char::is_whitespace) {
        return Err(ApiError::bad_request("surface must be one non-empty token"));
    }
    let mut s = session.lock().expect("session poisoned");
    let context = s.commit(&req.surface).to_vec();
    Ok(Json(json!({"context": context})))
}

async fn predict(
    State(st): State<Shared>,
    Path(id): Path<String>,
    query: Result<Query<PredictQuery>, QueryRejection>,
) -> ApiResult<Json<serde_json::Value>> {
    let session = st.session(&id)?;
    let Query(q) = query?;
    let k = q.k.unwrap_or(3).min(st.config.max_candidates);
    let s = session.lock().expect("session poisoned");
    let candidates: Vec<CandidateView> = s.predict(k).iter().map(CandidateView::from).collect();
    Ok(Json(json!({"candidates": candidates})))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/layout/{language}", get(layout))
        .route("/v1/session", post(create_session))
        .route("/v1/session/{id}/key", post(key))
        .route("/v1/session/{id}/backspace", post(backspace))
        .route("/v1/session/{id}/commit", post(commit))
        .route("/v1/session/{id}/predict", get(predict))
        .with_state(Arc::new(state))
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(state: AppState, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
