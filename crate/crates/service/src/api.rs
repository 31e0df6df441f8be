//! HTTP routes.
//!
//! | method | path | body / query |
//! |---|---|---|
//! | GET | `/api/sessions` | |
//! | GET | `/api/sessions/{id}/threads` | `?view=coverage\|segments` |
//! | GET | `/api/sessions/{id}/events/{event_id}` | |
//! | GET | `/api/sessions/{id}/topics/{k}/terms` | `?n=10` |
//! | POST | `/api/sessions/{id}/merges` | `{"merges":[{"source":1,"target":0}]}` |
//! | PUT | `/api/sessions/{id}/params` | `{"tau_count":3,"tau_gap_ms":120000}` |
//!
//! Errors are `{"error": code, "message": text}`.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use provthreads_core::{merged_topic_terms, MergeMap, SegmentationParams, TopicId, View};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::store::{SessionStore, SessionSummary, StoreError};

pub const API_SCHEMA: &str = "provthreads-api/1";
const DEFAULT_TERM_COUNT: usize = 10;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        let message = err.to_string();
        match err {
            StoreError::UnknownSession(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_session", message),
            StoreError::InvalidMerge(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_merge", message),
            StoreError::InvalidParams(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_params", message),
            StoreError::Load { .. } | StoreError::Io { .. } => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({ "error": self.code, "message": self.message })),
        )
            .into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/api/sessions", get(list_sessions))
        .route("/api/sessions/{id}/threads", get(get_threads))
        .route("/api/sessions/{id}/events/{event_id}", get(get_event_details))
        .route("/api/sessions/{id}/topics/{topic}/terms", get(get_topic_terms))
        .route("/api/sessions/{id}/merges", post(post_merge))
        .route("/api/sessions/{id}/params", put(put_params))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(store)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionList {
    pub schema: String,
    pub sessions: Vec<SessionSummary>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryResponse {
    pub schema: String,
    pub session: SessionSummary,
}

fn summary_response(session: SessionSummary) -> Json<SummaryResponse> {
    Json(SummaryResponse {
        schema: API_SCHEMA.to_string(),
        session,
    })
}

async fn list_sessions(State(store): State<Arc<SessionStore>>) -> Json<SessionList> {
    Json(SessionList {
        schema: API_SCHEMA.to_string(),
        sessions: store.summaries(),
    })
}

async fn get_threads(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let snapshot = store.snapshot(&id)?;
    let view: View = match query.get("view") {
        Some(v) => v
            .parse()
            .map_err(|e: String| ApiError::new(StatusCode::BAD_REQUEST, "unknown_view", e))?,
        None => View::Coverage,
    };
    Ok(Json(snapshot.views.geometry(view)).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EventDetail {
    pub schema: String,
    pub event_id: String,
    pub timestamp_ms: u64,
    pub action: String,
    pub doc_id: Option<String>,
    pub title: Option<String>,
    pub payload: Option<String>,
    /// Topic after merges; `null` for unlabeled events.
    pub topic: Option<usize>,
    /// Topic the labeler assigned before any merge.
    pub model_topic: Option<usize>,
    pub reason: String,
    pub raw: Value,
}

async fn get_event_details(
    State(store): State<Arc<SessionStore>>,
    Path((id, event_id)): Path<(String, String)>,
) -> ApiResult<EventDetail> {
    let snapshot = store.snapshot(&id)?;
    let unknown = || {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_event",
            format!("unknown event {event_id:?}"),
        )
    };
    let merged = snapshot.views.labeled.find(&event_id).ok_or_else(unknown)?;
    let original = snapshot.analysis.labeled.find(&event_id).ok_or_else(unknown)?;
    let ev = &merged.event;
    let title = ev
        .doc_id
        .as_deref()
        .and_then(|d| snapshot.analysis.corpus.document(d))
        .map(|d| d.title.clone());
    Ok(Json(EventDetail {
        schema: API_SCHEMA.to_string(),
        event_id: ev.event_id.clone(),
        timestamp_ms: ev.timestamp_ms,
        action: ev.action.as_str().to_string(),
        doc_id: ev.doc_id.clone(),
        title,
        payload: ev.payload.clone(),
        topic: merged.topic.map(|t| t.0),
        model_topic: original.topic.map(|t| t.0),
        reason: merged.reason.as_str().to_string(),
        raw: Value::Object(ev.record()),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TermEntry {
    pub term: String,
    pub probability: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TopicTerms {
    pub schema: String,
    pub topic: usize,
    /// Model topics folded into this one, itself included.
    pub members: Vec<usize>,
    pub terms: Vec<TermEntry>,
}

async fn get_topic_terms(
    State(store): State<Arc<SessionStore>>,
    Path((id, topic)): Path<(String, String)>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult<TopicTerms> {
    let snapshot = store.snapshot(&id)?;
    let unknown = || {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_topic",
            format!("unknown topic {topic:?}"),
        )
    };
    let k: usize = topic.parse().map_err(|_| unknown())?;
    let n = match query.get("n") {
        Some(n) => n
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| ApiError::bad_request("n must be a positive integer"))?,
        None => DEFAULT_TERM_COUNT,
    };
    let model = &snapshot.analysis.model;
    let merges = &snapshot.views.merges;
    let terms = merged_topic_terms(model, merges, TopicId(k), n).map_err(|_| unknown())?;
    Ok(Json(TopicTerms {
        schema: API_SCHEMA.to_string(),
        topic: k,
        members: merges
            .members(TopicId(k), model.topic_count())
            .into_iter()
            .map(|t| t.0)
            .collect(),
        terms: terms
            .into_iter()
            .map(|(term, probability)| TermEntry { term, probability })
            .collect(),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MergePair {
    pub source: usize,
    pub target: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MergeRequest {
    pub merges: Vec<MergePair>,
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

async fn post_merge(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<SummaryResponse> {
    store.snapshot(&id)?;
    let request: MergeRequest = parse_body(&body)?;
    let delta = MergeMap::from_pairs(request.merges.iter().map(|p| (TopicId(p.source), TopicId(p.target))));
    if request.merges.len() != delta.pairs().count() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_merge",
            "a topic appears as a source more than once",
        ));
    }
    Ok(summary_response(store.merge(&id, &delta)?))
}

async fn put_params(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<SummaryResponse> {
    store.snapshot(&id)?;
    let value: Value = parse_body(&body)?;
    if !value.is_object() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_params",
            "parameters must be a JSON object",
        ));
    }
    let params: SegmentationParams = serde_json::from_value(value).map_err(|e| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_params",
            format!("invalid parameters: {e}"),
        )
    })?;
    Ok(summary_response(store.set_params(&id, params)?))
}
