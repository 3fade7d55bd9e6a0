mod common;

use std::fs;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use coro_cli::server::{router, AppState};
use serde_json::Value;
use tower::ServiceExt;

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn post(body: impl Into<Body>) -> Request<Body> {
    Request::post("/v1/infer").header("content-type", "application/json").body(body.into()).unwrap()
}

#[tokio::test]
async fn health_reports_version() {
    let app = router(AppState::new(common::model(), 2, None));
    let (status, v) = send(&app, Request::get("/v1/health").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["model_version"], "test-model");
    assert!(v["uptime_s"].as_f64().unwrap() >= 0.0);
}

#[tokio::test]
async fn valid_bundle_is_scored_and_logged() {
    let log = tempfile::NamedTempFile::new().unwrap();
    let app = router(AppState::new(common::model(), 2, Some(log.reopen().unwrap())));
    let (status, v) = send(&app, post(serde_json::to_vec(&common::bundle("S-9")).unwrap())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["study_id"], "S-9");
    assert_eq!(v["segments"].as_array().unwrap().len(), 18);
    assert!(v["latency_ms"]["total"].as_f64().unwrap() > 0.0);

    let (status, _) = send(&app, post("{}")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let lines: Vec<Value> =
        fs::read_to_string(log.path()).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["status"], 200);
    assert_eq!(lines[0]["study_id"], "S-9");
    assert_eq!(lines[1]["status"], 400);
}

#[tokio::test]
async fn malformed_json_reports_the_field_path() {
    let app = router(AppState::new(common::model(), 2, None));
    let (status, v) = send(&app, post(r#"{"study": {"study_id": "x", "patient_id": "p", "dominance": "right", "videos": [{"video_id": 4}]}}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "schema_violation");
    assert_eq!(v["path"], "study.videos[0].video_id");

    let (status, v) = send(&app, post(r#"{"study": "#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["path"].is_string());
}

#[tokio::test]
async fn pipeline_errors_are_unprocessable() {
    let app = router(AppState::new(common::model(), 2, None));
    let mut b = common::bundle("S-1");
    b["study"]["dominance"] = "unknown".into();
    let (status, v) = send(&app, post(serde_json::to_vec(&b).unwrap())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "unknown_dominance");

    let mut b = common::bundle("S-1");
    for video in b["study"]["videos"].as_array_mut().unwrap() {
        video["equipment"] = "wire".into();
    }
    let (status, v) = send(&app, post(serde_json::to_vec(&b).unwrap())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "no_diagnostic_content");
}

#[tokio::test]
async fn requests_beyond_capacity_are_rejected() {
    let state = AppState::new(common::model(), 1, None);
    let app = router(state.clone());
    let held = state.permits().try_acquire_owned().unwrap();
    let (status, v) = send(&app, post(serde_json::to_vec(&common::bundle("S-1")).unwrap())).await;
    assert_eq!(status, StatusCode::TOO_MANY_REQUESTS);
    assert_eq!(v["error"], "overloaded");
    drop(held);
    let (status, _) = send(&app, post(serde_json::to_vec(&common::bundle("S-1")).unwrap())).await;
    assert_eq!(status, StatusCode::OK);
}
