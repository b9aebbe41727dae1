//! HTTP API over editable encodings.
//!
//! | method | path                           | body                      | response              |
//! |--------|--------------------------------|---------------------------|-----------------------|
//! | POST   | `/sessions`                    | WAV bytes                 | 202 `{id, status}`    |
//! | GET    | `/sessions/{id}`               |                           | status and report     |
//! | PATCH  | `/sessions/{id}/events/{n}`    | one edit, JSON            | `{revision}`          |
//! | POST   | `/sessions/{id}/render`        | `{event_subset?}`         | `audio/wav`           |
//! | GET    | `/sessions/{id}/residual`      |                           | PNG (base64) + norms  |
//!
//! PATCH honors `If-Match: <revision>`; a stale revision is rejected with 409.

pub mod edit;
pub mod residual;
pub mod state;
pub mod store;

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use siac_core::codec::wav_bytes;
use siac_core::report::{inspect, InspectReport};
use siac_core::stream::{decode_events, decode_stream};

use edit::{apply, EditError, EditRequest, JournalEntry};
use state::{decode_upload, AppState, Session, Snapshot, Status};

pub use state::Config;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    let cap = state.config.max_upload_bytes;
    Router::new()
        .route("/sessions", post(create_session).layer(DefaultBodyLimit::max(cap)))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/events/{n}", patch(edit_event))
        .route("/sessions/{id}/render", post(render))
        .route("/sessions/{id}/residual", get(residual))
        .with_state(state)
}

fn session(state: &AppState, id: &str) -> ApiResult<Arc<Session>> {
    state
        .get(id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}")))
}

fn ready(s: &Session) -> ApiResult<Arc<Snapshot>> {
    match s.status() {
        Status::Ready(snap) => Ok(snap),
        Status::Encoding => Err(ApiError::new(StatusCode::CONFLICT, "session is still encoding")),
        Status::Failed(msg) => Err(ApiError::new(StatusCode::CONFLICT, format!("session failed: {msg}"))),
    }
}

fn etag(revision: u64) -> HeaderValue {
    HeaderValue::from_str(&format!("\"{revision}\"")).expect("ascii")
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub status: String,
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let pcm = decode_upload(&body, state.bank.sample_rate())
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed WAV: {e}")))?;
    let s = state.create(body.to_vec(), pcm).map_err(ApiError::internal)?;
    let location = HeaderValue::from_str(&format!("/sessions/{}", s.id)).expect("ascii");
    let body = Created {
        id: s.id.clone(),
        status: "encoding".into(),
    };
    Ok((StatusCode::ACCEPTED, [(header::LOCATION, location)], Json(body)).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    /// `encoding`, `ready` or `failed`.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub revision: Option<u64>,
    /// Same schema as `siac inspect --json`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<InspectReport>,
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = session(&state, &id)?;
    let (status, error, snap) = match s.status() {
        Status::Encoding => ("encoding", None, None),
        Status::Failed(m) => ("failed", Some(m), None),
        Status::Ready(snap) => ("ready", None, Some(snap)),
    };
    let report = match &snap {
        Some(snap) => Some(inspect(&snap.encoding, &state.bank).map_err(ApiError::internal)?),
        None => None,
    };
    let view = SessionView {
        id: s.id.clone(),
        status: status.into(),
        error,
        revision: snap.as_ref().map(|s| s.revision),
        report,
    };
    let mut resp = Json(view).into_response();
    if let Some(snap) = snap {
        resp.headers_mut().insert(header::ETAG, etag(snap.revision));
    }
    Ok(resp)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Revision {
    pub revision: u64,
}

fn if_match(headers: &HeaderMap) -> ApiResult<Option<u64>> {
    let Some(v) = headers.get(header::IF_MATCH) else {
        return Ok(None);
    };
    let text = v
        .to_str()
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "If-Match is not text"))?;
    text.trim()
        .trim_start_matches("W/")
        .trim_matches('"')
        .parse()
        .map(Some)
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, format!("If-Match {text:?} is not a revision")))
}

async fn edit_event(
    State(state): State<Arc<AppState>>,
    Path((id, n)): Path<(String, usize)>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let s = session(&state, &id)?;
    let request: EditRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("bad edit: {e}")))?;
    let expected = if_match(&headers)?;
    let _writer = s.writer.lock().await;
    let snap = ready(&s)?;
    if let Some(rev) = expected {
        if rev != snap.revision {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                format!("revision {rev} is stale; current is {}", snap.revision),
            ));
        }
    }
    let edit = request
        .into_edit()
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let encoding = apply(&snap.encoding, n, &edit).map_err(|e| match e {
        EditError::NoEvent(_) => ApiError::new(StatusCode::NOT_FOUND, e.to_string()),
        EditError::Invalid(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    })?;
    let entry = JournalEntry {
        revision: snap.revision + 1,
        event: n,
        edit,
    };
    let next = state.commit(&s, &snap, entry, encoding).map_err(ApiError::internal)?;
    let mut resp = Json(Revision { revision: next.revision }).into_response();
    resp.headers_mut().insert(header::ETAG, etag(next.revision));
    Ok(resp)
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderRequest {
    /// Indices of the events to mix; every event when absent.
    pub event_subset: Option<Vec<usize>>,
}

async fn render(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let s = session(&state, &id)?;
    let request: RenderRequest = if body.iter().all(u8::is_ascii_whitespace) {
        RenderRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("bad request: {e}")))?
    };
    let snap = ready(&s)?;
    let n = snap.encoding.events.len();
    if let Some(bad) = request.event_subset.iter().flatten().find(|&&i| i >= n) {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("event {bad} out of range ({n} events)"),
        ));
    }
    let bank = state.bank.clone();
    let pcm = tokio::task::spawn_blocking(move || match request.event_subset {
        None => decode_stream(&snap.encoding, &bank, false),
        Some(subset) => {
            let mut keep = vec![false; n];
            for i in subset {
                keep[i] = true;
            }
            decode_events(&snap.encoding, &bank, false, |i| keep[i])
        }
    })
    .await
    .map_err(ApiError::internal)?
    .map_err(ApiError::internal)?;
    let bytes = wav_bytes(&pcm).map_err(ApiError::internal)?;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], bytes).into_response())
}

async fn residual(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = session(&state, &id)?;
    let snap = ready(&s)?;
    let bank = state.bank.clone();
    let report = tokio::task::spawn_blocking(move || {
        let recon = decode_stream(&snap.encoding, &bank, false)?;
        residual::residual_report(&snap.source, &recon, &snap.encoding)
    })
    .await
    .map_err(ApiError::internal)?
    .map_err(ApiError::internal)?;
    Ok(Json(report).into_response())
}
