//! HTTP classification service over one immutable bundle.
//!
//! Routes: `POST /v1/classify`, `GET /v1/health`, `GET /v1/classes`. Every
//! error is JSON: `{"error": {"code": "...", "message": "..."}}`. See
//! `docs/api.md` for the exact wire format.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;

use crate::engine::{Choice, Engine, EngineError};
use crate::persist::FORMAT_VERSION;
use crate::record::SpectrumRecord;

/// Largest accepted request body.
pub const BODY_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyRequest {
    pub spectrum: SpectrumRecord,
    #[serde(default = "default_choice")]
    pub classifier: Choice,
}

fn default_choice() -> Choice {
    Choice::Both
}

/// A JSON error response.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": {"code": self.code, "message": self.message}}))).into_response()
    }
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/v1/classify", post(classify))
        .route("/v1/health", get(health))
        .route("/v1/classes", get(classes))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(engine)
}

/// Serves on an already bound listener until the process is interrupted.
pub async fn serve_on(listener: TcpListener, engine: Arc<Engine>) -> std::io::Result<()> {
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub async fn serve(addr: SocketAddr, engine: Arc<Engine>) -> std::io::Result<()> {
    serve_on(TcpListener::bind(addr).await?, engine).await
}

async fn classify(
    State(engine): State<Arc<Engine>>,
    headers: HeaderMap,
    body: Result<Bytes, BytesRejection>,
) -> Result<Response, ApiError> {
    let body = body.map_err(|e| {
        if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::new(e.status(), "payload_too_large", format!("request body exceeds {BODY_LIMIT} bytes"))
        } else {
            ApiError::new(StatusCode::BAD_REQUEST, "unreadable_body", e.body_text())
        }
    })?;
    let json_content = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.split(';').next())
        .is_some_and(|v| v.trim().eq_ignore_ascii_case("application/json"));
    if !json_content {
        return Err(ApiError::new(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            "unsupported_media_type",
            "expected content-type application/json",
        ));
    }
    let req: ClassifyRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.to_string()))?;
    let spectrum = req
        .spectrum
        .to_spectrum()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_spectrum", e.to_string()))?;
    let response = engine.classify(&spectrum, req.classifier).map_err(|e| match e {
        EngineError::Unavailable(_) => ApiError::new(StatusCode::BAD_REQUEST, "classifier_unavailable", e.to_string()),
        EngineError::Classifier(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unclassifiable", e.to_string()),
    })?;
    Ok(Json(response).into_response())
}

async fn health(State(engine): State<Arc<Engine>>) -> Json<serde_json::Value> {
    let b = engine.bundle();
    Json(json!({
        "status": "ok",
        "model_versions": {
            "bundle": FORMAT_VERSION,
            "ann": b.ann().map(|_| FORMAT_VERSION),
            "parzen": b.parzen().map(|_| FORMAT_VERSION),
        },
    }))
}

async fn classes(State(engine): State<Arc<Engine>>) -> Json<serde_json::Value> {
    let classes: Vec<_> =
        engine.labels().iter().enumerate().map(|(index, label)| json!({"index": index, "label": label})).collect();
    Json(json!({ "classes": classes }))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed on this route")
}
