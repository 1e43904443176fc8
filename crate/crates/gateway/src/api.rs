use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Redirect, Response};
use axum::routing::get;
use axum::{Json, Router};
use pairank_core::{Choice, Progress, RankedItem};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};
use crate::store::{CreateSession, ImageSource, NextView, SessionManifest, Store};

pub type AppState = Arc<Store>;

#[derive(Debug, Deserialize)]
struct JudgmentRequest {
    query_id: u64,
    choice: Choice,
}

#[derive(Debug, Serialize)]
struct JudgmentResponse {
    accepted: bool,
    progress: Progress,
}

#[derive(Debug, Serialize)]
struct SessionStatus {
    #[serde(flatten)]
    manifest: SessionManifest,
    progress: Progress,
    complete: bool,
}

#[derive(Debug, Serialize)]
struct RankingRow {
    rank: usize,
    #[serde(flatten)]
    item: RankedItem,
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::MalformedBody(e.to_string()))
}

pub fn router(store: AppState) -> Router {
    let v1 = Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(session_status))
        .route("/sessions/{id}/next", get(next_query))
        .route("/sessions/{id}/judgments", axum::routing::post(submit_judgment))
        .route("/sessions/{id}/ranking", get(ranking))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/images/{token}", get(image));
    Router::new().route("/healthz", get(healthz)).nest("/v1", v1).with_state(store)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn create_session(State(store): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<SessionManifest>)> {
    let request: CreateSession = parse(&body)?;
    Ok((StatusCode::CREATED, Json(store.create(request)?)))
}

async fn list_sessions(State(store): State<AppState>) -> ApiResult<Json<Vec<SessionManifest>>> {
    Ok(Json(store.list()?))
}

async fn session_status(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionStatus>> {
    let (manifest, progress) = store.manifest(&id)?;
    Ok(Json(SessionStatus { manifest, complete: progress.done >= progress.budget, progress }))
}

async fn next_query(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<NextView>> {
    Ok(Json(store.next(&id)?))
}

async fn submit_judgment(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<JudgmentResponse>> {
    let request: JudgmentRequest = parse(&body)?;
    let progress = store.judge(&id, request.query_id, request.choice)?;
    Ok(Json(JudgmentResponse { accepted: true, progress }))
}

async fn ranking(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<RankingRow>>> {
    let rows = store.ranking(&id)?.into_iter().enumerate().map(|(k, item)| RankingRow { rank: k + 1, item }).collect();
    Ok(Json(rows))
}

async fn export(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let log = store.export(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], log).into_response())
}

fn content_type(path: &std::path::Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("png") => "image/png",
        Some("webp") => "image/webp",
        Some("gif") => "image/gif",
        Some("bmp") => "image/bmp",
        _ => "application/octet-stream",
    }
}

async fn image(State(store): State<AppState>, Path((id, token)): Path<(String, String)>) -> ApiResult<Response> {
    match store.image(&id, &token)? {
        ImageSource::Remote(url) => Ok(Redirect::temporary(&url).into_response()),
        ImageSource::File(path) => {
            let bytes = tokio::fs::read(&path).await.map_err(|_| ApiError::ImageNotFound(token))?;
            Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response())
        }
    }
}
