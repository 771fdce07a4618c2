use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::{DialogService, ServiceError, Session, SessionStatus, TurnDebug};

struct AppState {
    service: DialogService,
    static_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
struct CreateRequest {
    seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session_id: String,
    pub goal: String,
    pub greeting: String,
}

#[derive(Debug, Deserialize)]
struct TurnRequest {
    text: String,
    confidence: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TurnResponse {
    pub reply: String,
    pub ended: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub debug: Option<TurnDebug>,
}

#[derive(Debug, Deserialize)]
struct RatingRequest {
    correctness: u8,
    naturalness: u8,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TranscriptTurn {
    pub user: String,
    pub reply: String,
}

/// Session as shown to the client; the model assignment is left out.
#[derive(Debug, Serialize, Deserialize)]
pub struct Transcript {
    pub session_id: String,
    pub goal: String,
    pub greeting: String,
    pub status: SessionStatus,
    pub turns: Vec<TranscriptTurn>,
    pub rating: Option<super::Rating>,
}

impl From<&Session> for Transcript {
    fn from(s: &Session) -> Self {
        Self {
            session_id: s.id.clone(),
            goal: s.goal.describe(),
            greeting: s.greeting.clone(),
            status: s.status,
            turns: s.exchanges.iter().map(|e| TranscriptTurn { user: e.user.clone(), reply: e.reply.clone() }).collect(),
            rating: s.rating,
        }
    }
}

struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            ServiceError::UnknownSession(_) | ServiceError::UnknownModel(_) => StatusCode::NOT_FOUND,
            ServiceError::SessionEnded(_) | ServiceError::InvalidState(_) => StatusCode::CONFLICT,
            ServiceError::InvalidInput(_) | ServiceError::EmptyStore => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::json!({ "error": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn create(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult<CreateResponse> {
    let req: CreateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        CreateRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ServiceError::InvalidInput(format!("request body: {e}")))?
    };
    let s = st.service.create_session(None, req.seed)?;
    Ok(Json(CreateResponse { session_id: s.id.clone(), goal: s.goal.describe(), greeting: s.greeting.clone() }))
}

async fn turn(
    State(st): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<TurnRequest>,
) -> ApiResult<TurnResponse> {
    let st2 = st.clone();
    let ex = tokio::task::spawn_blocking(move || st2.service.process_turn(&id, &req.text, req.confidence).map(|ex| (ex, id)))
        .await
        .map_err(|e| ServiceError::Log(format!("turn worker failed: {e}")))?;
    let (ex, id) = ex?;
    let ended = st.service.session(&id)?.status == SessionStatus::Ended;
    let debug = st.service.config().debug.then_some(ex.debug);
    Ok(Json(TurnResponse { reply: ex.reply, ended, debug }))
}

async fn rate(
    State(st): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<RatingRequest>,
) -> ApiResult<super::Rating> {
    Ok(Json(st.service.rate_session(&id, req.correctness, req.naturalness)?))
}

async fn transcript(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Transcript> {
    Ok(Json(Transcript::from(&st.service.session(&id)?)))
}

async fn report(State(st): State<Arc<AppState>>) -> ApiResult<Vec<super::ModelReport>> {
    let sessions = match st.service.store() {
        Some(store) => store.load_sessions(st.service.indexer())?,
        None => st.service.sessions(),
    };
    Ok(Json(super::session_report(&sessions, st.service.indexer())?))
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("ico") => "image/x-icon",
        _ => "application/octet-stream",
    }
}

async fn static_file(State(st): State<Arc<AppState>>, uri: Uri) -> Response {
    let Some(root) = &st.static_dir else {
        return StatusCode::NOT_FOUND.into_response();
    };
    let rel = uri.path().trim_start_matches('/');
    let rel = Path::new(if rel.is_empty() { "index.html" } else { rel });
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let path = root.join(rel);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], Body::from(bytes)).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

/// The JSON API, with files under `static_dir` served for every other GET.
pub fn router(service: DialogService, static_dir: Option<PathBuf>) -> Router {
    let state = Arc::new(AppState { service, static_dir });
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(transcript))
        .route("/sessions/{id}/turns", post(turn))
        .route("/sessions/{id}/rating", post(rate))
        .route("/report", get(report))
        .fallback(get(static_file))
        .with_state(state)
}
