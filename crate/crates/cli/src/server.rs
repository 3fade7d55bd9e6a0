//! HTTP inference service.
//!
//! `POST /v1/infer` takes an `InferenceBundle` and returns an
//! `InferenceResult`; `GET /v1/health` reports the model version and uptime.
//! Timing starts when the handler receives the request body.

use std::fs::File;
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use coro_core::inference::{infer_study_timed, parse_bundle, InferenceModel, LatencyBreakdown};
use coro_core::Error;
use serde::Serialize;
use serde_json::json;
use tokio::sync::Semaphore;

struct Inner {
    model: InferenceModel,
    started: Instant,
    permits: Arc<Semaphore>,
    max_concurrent: usize,
    log: Option<Mutex<File>>,
    requests: AtomicU64,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(model: InferenceModel, max_concurrent: usize, log: Option<File>) -> Self {
        Self(Arc::new(Inner {
            model,
            started: Instant::now(),
            permits: Arc::new(Semaphore::new(max_concurrent)),
            max_concurrent,
            log: log.map(Mutex::new),
            requests: AtomicU64::new(0),
        }))
    }

    /// The request-slot semaphore; exposed so callers can observe or hold
    /// capacity.
    pub fn permits(&self) -> Arc<Semaphore> {
        self.0.permits.clone()
    }

    fn log(&self, record: &LogRecord) {
        let Some(file) = &self.0.log else { return };
        let mut line = serde_json::to_string(record).expect("log record serializes");
        line.push('\n');
        let mut f = file.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = f.write_all(line.as_bytes()).and_then(|_| f.flush()) {
            log::error!("latency log write failed: {e}");
        }
    }
}

#[derive(Serialize)]
struct LogRecord<'a> {
    request: u64,
    unix_ms: u128,
    status: u16,
    #[serde(skip_serializing_if = "Option::is_none")]
    study_id: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    latency_ms: LatencyBreakdown,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/infer", post(infer))
        .route("/v1/health", get(health))
        .with_state(state)
}

async fn health(State(s): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "model_version": s.0.model.version,
        "uptime_s": s.0.started.elapsed().as_secs_f64(),
        "max_concurrent": s.0.max_concurrent,
        "in_flight": s.0.max_concurrent - s.0.permits.available_permits(),
    }))
}

fn error_body(status: StatusCode, code: &str, message: String, path: Option<String>) -> Response {
    let mut body = json!({ "error": code, "message": message });
    if let Some(p) = path {
        body["path"] = json!(p);
    }
    (status, Json(body)).into_response()
}

async fn infer(State(s): State<AppState>, body: Bytes) -> Response {
    let received = Instant::now();
    let request = s.0.requests.fetch_add(1, Ordering::Relaxed);
    let unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
    let total_only = |t: Instant| LatencyBreakdown { total: t.elapsed().as_secs_f64() * 1e3, ..Default::default() };

    let Ok(permit) = s.0.permits.clone().try_acquire_owned() else {
        s.log(&LogRecord {
            request,
            unix_ms,
            status: 429,
            study_id: None,
            error: Some("overloaded"),
            latency_ms: total_only(received),
        });
        return error_body(
            StatusCode::TOO_MANY_REQUESTS,
            "overloaded",
            format!("more than {} concurrent requests", s.0.max_concurrent),
            None,
        );
    };
    let worker = s.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        let bundle = parse_bundle(&body)?;
        infer_study_timed(&bundle, &worker.0.model, received)
    })
    .await;

    match outcome {
        Ok(Ok(result)) => {
            s.log(&LogRecord {
                request,
                unix_ms,
                status: 200,
                study_id: Some(&result.study_id),
                error: None,
                latency_ms: result.latency_ms,
            });
            (StatusCode::OK, Json(result)).into_response()
        }
        Ok(Err(e)) => {
            let status = match e {
                Error::Schema { .. } => StatusCode::BAD_REQUEST,
                _ => StatusCode::UNPROCESSABLE_ENTITY,
            };
            s.log(&LogRecord {
                request,
                unix_ms,
                status: status.as_u16(),
                study_id: None,
                error: Some(e.code()),
                latency_ms: total_only(received),
            });
            match e {
                Error::Schema { path, message } => error_body(status, "schema_violation", message, Some(path)),
                other => error_body(status, other.code(), other.to_string(), None),
            }
        }
        Err(join) => {
            log::error!("request {request} failed: {join}");
            s.log(&LogRecord {
                request,
                unix_ms,
                status: 500,
                study_id: None,
                error: Some("internal"),
                latency_ms: total_only(received),
            });
            error_body(StatusCode::INTERNAL_SERVER_ERROR, "internal", "request handler failed".into(), None)
        }
    }
}
