//! HTTP surface: STOW-RS store, WADO-RS retrieve, the prediction queue API
//! and health.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cxr_core::pipeline::Status;
use serde::Deserialize;
use serde_json::json;
use tokio::sync::Semaphore;

use crate::multipart::{boundary_from_content_type, parse_parts};
use crate::service::Gateway;
use crate::store::{Review, ReviewAction};

pub const DEFAULT_PAGE: usize = 50;
pub const MAX_PAGE: usize = 500;

#[derive(Clone)]
pub struct AppState {
    pub gateway: Arc<Gateway>,
    pub in_flight: Arc<Semaphore>,
    pub auth_token: Option<Arc<str>>,
}

fn error(status: StatusCode, message: impl ToString) -> Response {
    (status, Json(json!({ "error": message.to_string() }))).into_response()
}

pub fn router(state: AppState, max_request_bytes: usize) -> Router {
    let protected = Router::new()
        .route("/studies", post(stow))
        .route("/studies/{study}/instances/{sop}", get(wado))
        .route("/predictions", get(list_predictions))
        .route("/predictions/{sop}", get(get_prediction))
        .route("/predictions/{sop}/review", post(review))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route("/healthz", get(healthz))
        .merge(protected)
        .layer(DefaultBodyLimit::max(max_request_bytes))
        .with_state(state)
}

async fn require_token(State(state): State<AppState>, request: Request, next: Next) -> Response {
    if let Some(token) = &state.auth_token {
        let presented = request
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(token.as_ref()) {
            return error(StatusCode::UNAUTHORIZED, "missing or invalid bearer token");
        }
    }
    next.run(request).await
}

async fn stow(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> Response {
    let content_type = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("");
    let boundary = match boundary_from_content_type(content_type) {
        Ok(b) => b,
        Err(e) if e.is_media_type() => return error(StatusCode::UNSUPPORTED_MEDIA_TYPE, e),
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let parts = match parse_parts(&body, &boundary) {
        Ok(p) => p,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let Ok(_permit) = state.in_flight.clone().acquire_owned().await else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "shutting down");
    };
    let gateway = state.gateway.clone();
    match tokio::task::spawn_blocking(move || gateway.stow(&parts)).await {
        Ok(response) => {
            tracing::info!(
                accepted = response.accepted.len(),
                rejected = response.rejected.len(),
                failed = response.failed.len(),
                "stow"
            );
            Json(response).into_response()
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn wado(State(state): State<AppState>, Path((study, sop)): Path<(String, String)>) -> Response {
    let Some((path, _)) = state.gateway.store().locate(&study, &sop) else {
        return error(StatusCode::NOT_FOUND, format!("no instance {sop} in study {study}"));
    };
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, "application/dicom")], bytes).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    status: Option<String>,
    limit: Option<usize>,
    offset: Option<usize>,
}

async fn list_predictions(State(state): State<AppState>, Query(q): Query<ListQuery>) -> Response {
    let status = match q.status.as_deref().filter(|s| !s.is_empty()) {
        None => None,
        Some(s) => match Status::parse(s) {
            Some(st) => Some(st),
            None => return error(StatusCode::BAD_REQUEST, format!("unknown status {s:?}")),
        },
    };
    let limit = q.limit.unwrap_or(DEFAULT_PAGE).min(MAX_PAGE);
    let offset = q.offset.unwrap_or(0);
    let (records, total) = state.gateway.store().list(status, offset, limit);
    Json(json!({ "total": total, "offset": offset, "limit": limit, "records": records })).into_response()
}

async fn get_prediction(State(state): State<AppState>, Path(sop): Path<String>) -> Response {
    match state.gateway.store().get(&sop) {
        Some(r) => Json(r).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("no record for {sop}")),
    }
}

#[derive(Debug, Deserialize)]
struct ReviewBody {
    action: ReviewAction,
    #[serde(default)]
    note: String,
}

async fn review(State(state): State<AppState>, Path(sop): Path<String>, body: Bytes) -> Response {
    let parsed: ReviewBody = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid review body: {e}")),
    };
    let review = Review {
        action: parsed.action,
        note: parsed.note,
        reviewed_at: chrono::Utc::now(),
    };
    let gateway = state.gateway.clone();
    match tokio::task::spawn_blocking(move || gateway.store().set_review(&sop, review).map(|r| (sop, r))).await {
        Ok(Ok((_, Some(record)))) => Json(record).into_response(),
        Ok(Ok((sop, None))) => error(StatusCode::NOT_FOUND, format!("no record for {sop}")),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn healthz(State(state): State<AppState>) -> Response {
    let gw = &state.gateway;
    let pipeline = gw.pipeline();
    let store = gw.store();
    Json(json!({
        "status": "ok",
        "classifier": pipeline.classifier().model_version(),
        "ood_model": pipeline.ood_model().model_version(),
        "ood_threshold": pipeline.threshold(),
        "storage": {
            "dir": store.root().display().to_string(),
            "writable": store.writable(),
            "records": store.len(),
        },
    }))
    .into_response()
}
