//! HTTP/JSON transport for trainer sessions.

use std::path::PathBuf;
use std::sync::Arc;

use affecta_core::service::{ApiError, ApiResult, SaveRequest, SessionStore, StartRequest, VoteRequest, API_SCHEMA};
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tower_http::services::ServeDir;

type Store = Arc<SessionStore>;

fn error_response(e: ApiError) -> Response {
    let status = StatusCode::from_u16(e.code.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, Json(e)).into_response()
}

fn reply<T: Serialize>(ok: StatusCode, result: ApiResult<T>) -> Response {
    match result {
        Ok(body) => (ok, Json(body)).into_response(),
        Err(e) => error_response(e),
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

async fn start(State(store): State<Store>, body: Bytes) -> Response {
    let result = parse::<StartRequest>(&body).and_then(|req| store.start(&req));
    reply(StatusCode::CREATED, result)
}

async fn measure(State(store): State<Store>, Path(id): Path<String>) -> Response {
    reply(StatusCode::OK, store.measure(&id))
}

async fn pair(State(store): State<Store>, Path(id): Path<String>) -> Response {
    reply(StatusCode::OK, store.pair(&id))
}

async fn vote(State(store): State<Store>, Path(id): Path<String>, body: Bytes) -> Response {
    let result = store.get(&id).and_then(|_| parse::<VoteRequest>(&body)).and_then(|req| store.vote(&id, &req));
    reply(StatusCode::OK, result)
}

async fn views(State(store): State<Store>, Path(id): Path<String>) -> Response {
    reply(StatusCode::OK, store.views(&id))
}

async fn save(State(store): State<Store>, Path(id): Path<String>, body: Bytes) -> Response {
    let result = store.get(&id).and_then(|_| parse::<SaveRequest>(&body)).and_then(|req| store.save(&id, &req));
    reply(StatusCode::OK, result)
}

async fn schema() -> Response {
    ([(header::CONTENT_TYPE, "application/schema+json")], API_SCHEMA).into_response()
}

async fn not_found() -> Response {
    error_response(ApiError::new(affecta_core::service::ErrorCode::NotFound, "no such route"))
}

/// Session routes plus `GET /schema`; when `ui` is set, every other path
/// is served from that directory.
pub fn router(store: Store, ui: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/session", post(start))
        .route("/session/{id}/measure", post(measure))
        .route("/session/{id}/pair", post(pair))
        .route("/session/{id}/vote", post(vote))
        .route("/session/{id}/views", get(views))
        .route("/session/{id}/save", post(save))
        .route("/schema", get(schema))
        .with_state(store);
    match ui {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}

pub async fn serve(addr: std::net::SocketAddr, ui: Option<PathBuf>) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(SessionStore::new()), ui)).await?;
    Ok(())
}
