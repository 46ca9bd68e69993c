use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::{DateTime, Duration};
use http_body_util::BodyExt;
use nrts_core::{GoldStandard, SessionId};
use nrts_server::{open_store, router, AppState, ServerConfig, SteppingClock};
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

fn fixture(path: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    std::fs::read_to_string(root.join(path)).unwrap()
}

struct Harness {
    dir: TempDir,
    config: ServerConfig,
}

impl Harness {
    fn new(config: ServerConfig) -> Self {
        Self {
            dir: TempDir::new().unwrap(),
            config,
        }
    }

    fn with_gold(gold: &GoldStandard) -> Self {
        let h = Self::new(ServerConfig::default());
        open_store(h.dir.path()).unwrap().put_gold(gold).unwrap();
        h
    }

    /// A fresh router over the same directory, like a restarted process.
    fn app(&self) -> Router {
        let clock = SteppingClock::new(DateTime::from_timestamp(1_780_000_000, 0).unwrap(), Duration::seconds(1));
        router(AppState::new(
            open_store(self.dir.path()).unwrap(),
            self.config.clone(),
            Arc::new(clock),
        ))
    }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<String>, auth: Option<&str>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(token) = auth {
        req = req.header("authorization", format!("Bearer {token}"));
    }
    let req = req
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn bundle_json(gold: &GoldStandard) -> String {
    serde_json::to_string(&gold.to_document()).unwrap()
}

#[tokio::test]
async fn minted_sessions_are_distinct_and_start_empty() {
    let h = Harness::new(ServerConfig::default());
    let app = h.app();
    let (s1, a) = call(&app, "POST", "/api/v1/sessions", None, None).await;
    let (_, b) = call(&app, "POST", "/api/v1/sessions", None, None).await;
    assert_eq!(s1, StatusCode::CREATED);
    let (a, b) = (a["session_id"].as_str().unwrap(), b["session_id"].as_str().unwrap());
    assert_ne!(a, b);
    assert!(SessionId::is_valid(a) && SessionId::is_valid(b));

    let (status, stats) = call(&app, "GET", &format!("/api/v1/sessions/{a}/stats"), None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(stats["per_group"], json!([]));
    assert_eq!(stats["session_mean_distance"], Value::Null);
}

#[tokio::test]
async fn stats_reject_bad_and_unknown_ids() {
    let h = Harness::new(ServerConfig::default());
    let app = h.app();
    let (status, body) = call(&app, "GET", "/api/v1/sessions/NOT-AN-ID/stats", None, None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error_code"], "invalid_session_id");
    let unknown = SessionId::from_bytes([9; 16]);
    let (status, body) = call(&app, "GET", &format!("/api/v1/sessions/{unknown}/stats"), None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error_code"], "not_found");
}

#[tokio::test]
async fn trace_without_gold_is_a_conflict() {
    let h = Harness::new(ServerConfig::default());
    let app = h.app();
    let (status, body) = call(&app, "POST", "/api/v1/traces", Some(fixture("traces/missing-last-action.json")), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error_code"], "no_gold");
}

#[tokio::test]
async fn gold_scores_zero_against_itself() {
    let gold = GoldStandard::default_bundle();
    let h = Harness::with_gold(&gold);
    let app = h.app();
    let (status, body) = call(&app, "POST", "/api/v1/traces", Some(fixture("../crates/core/assets/gold/gold-trace.json")), None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["distance"], json!(0.0));
    assert_eq!(body["percent_display"], 0);
    assert!(SessionId::is_valid(body["session_id"].as_str().unwrap()));
    assert_eq!(body["phase_report"].as_array().unwrap().len(), 4);
}

#[tokio::test]
async fn invalid_and_malformed_traces() {
    let h = Harness::with_gold(&GoldStandard::default_bundle());
    let app = h.app();
    let (status, body) = call(&app, "POST", "/api/v1/traces", Some(fixture("traces/unknown-action.json")), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error_code"], "invalid_trace");
    let v = body["violations"].as_array().unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0]["kind"], "unknown_action");
    assert_eq!(v[0]["index"], 2);

    let (status, body) = call(&app, "POST", "/api/v1/traces", Some("{not json".into()), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error_code"], "malformed_json");

    let extra = r#"{"group_id": "g", "events": [], "surprise": 1}"#;
    let (status, _) = call(&app, "POST", "/api/v1/traces", Some(extra.into()), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let negative = r#"{"group_id": "g", "events": [{"action": "dry_infant", "start_ms": 10, "end_ms": 5}]}"#;
    let (status, body) = call(&app, "POST", "/api/v1/traces", Some(negative.into()), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["violations"][0]["kind"], "negative_duration");
}

#[tokio::test]
async fn json_ld_context_is_tolerated() {
    let h = Harness::with_gold(&GoldStandard::default_bundle());
    let app = h.app();
    let mut trace: Value = serde_json::from_str(&fixture("traces/missing-last-action.json")).unwrap();
    trace["@context"] = json!({"@vocab": "http://example.org/"});
    let (status, body) = call(&app, "POST", "/api/v1/traces", Some(trace.to_string()), None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let d = body["distance"].as_f64().unwrap();
    assert!((d - 1.0 / 6.0).abs() < 1e-9);
    assert_eq!(body["percent_display"], 17);
}

#[tokio::test]
async fn client_session_id_is_honored_and_stats_follow() {
    let h = Harness::with_gold(&GoldStandard::load_dir(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/gold-5")).unwrap());
    let app = h.app();
    let sid = SessionId::from_bytes([5; 16]).to_string();
    let mut scores = Vec::new();
    for name in ["group-a-1.json", "group-a-2.json", "group-b-1.json"] {
        let mut trace: Value = serde_json::from_str(&fixture(&format!("traces/{name}"))).unwrap();
        trace["session_id"] = json!(sid);
        let (status, body) = call(&app, "POST", "/api/v1/traces", Some(trace.to_string()), None).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        assert_eq!(body["session_id"], json!(sid));
        scores.push(body["distance"].as_f64().unwrap());
    }
    assert_eq!(scores, [0.2, 0.4, 0.8]);

    let uri = format!("/api/v1/sessions/{sid}/stats");
    let (status, stats) = call(&app, "GET", &uri, None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(stats["trace_count"], 3);
    assert_eq!(stats["per_group"][0]["group_id"], "A");
    assert!((stats["per_group"][0]["mean_distance"].as_f64().unwrap() - 0.3).abs() < 1e-12);
    assert_eq!(stats["per_group"][1]["mean_distance"], json!(0.8));
    let mean = stats["session_mean_distance"].as_f64().unwrap();
    assert!((mean - 1.4 / 3.0).abs() < 1e-9);

    let (_, again) = call(&h.app(), "GET", &uri, None, None).await;
    assert_eq!(again, stats);
}

#[tokio::test]
async fn gold_upload_round_trip_and_revisions() {
    let h = Harness::new(ServerConfig::default());
    let app = h.app();
    let (status, body) = call(&app, "GET", "/api/v1/gold", None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error_code"], "no_gold");

    let gold = GoldStandard::default_bundle();
    let (status, body) = call(&app, "PUT", "/api/v1/gold", Some(bundle_json(&gold)), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"revision": 1}));
    let (_, body) = call(&app, "PUT", "/api/v1/gold", Some(bundle_json(&gold)), None).await;
    assert_eq!(body, json!({"revision": 2}));

    let (status, body) = call(&app, "GET", "/api/v1/gold", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["revision"], 2);
    let doc = serde_json::from_value(body["bundle"].clone()).unwrap();
    assert_eq!(GoldStandard::from_document(doc).unwrap(), gold);

    let mut broken: Value = serde_json::from_str(&bundle_json(&gold)).unwrap();
    broken["trace"]["events"][0]["action"] = json!("not_an_action");
    let (status, body) = call(&app, "PUT", "/api/v1/gold", Some(broken.to_string()), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error_code"], "invalid_bundle");
    let (_, body) = call(&app, "GET", "/api/v1/gold", None, None).await;
    assert_eq!(body["revision"], 2);
}

#[tokio::test]
async fn admin_token_guards_gold_only() {
    let h = Harness::new(ServerConfig {
        admin_token: Some("s3cret".into()),
        ..ServerConfig::default()
    });
    let app = h.app();
    let body = bundle_json(&GoldStandard::default_bundle());
    let (status, err) = call(&app, "PUT", "/api/v1/gold", Some(body.clone()), None).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(err["error_code"], "forbidden");
    let (status, _) = call(&app, "PUT", "/api/v1/gold", Some(body.clone()), Some("wrong")).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    let (status, _) = call(&app, "PUT", "/api/v1/gold", Some(body), Some("s3cret")).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = call(&app, "POST", "/api/v1/traces", Some(fixture("traces/late-dry.json")), None).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn resubmitting_the_same_recording_is_idempotent() {
    let h = Harness::with_gold(&GoldStandard::default_bundle());
    let app = h.app();
    let mut trace: Value = serde_json::from_str(&fixture("traces/late-dry.json")).unwrap();
    trace["session_id"] = json!(SessionId::from_bytes([1; 16]).to_string());
    trace["recorded_at"] = json!("2026-06-01T09:30:00Z");
    let (_, first) = call(&app, "POST", "/api/v1/traces", Some(trace.to_string()), None).await;
    let (_, second) = call(&app, "POST", "/api/v1/traces", Some(trace.to_string()), None).await;
    assert_eq!(first, second);
    let uri = format!("/api/v1/sessions/{}/stats", trace["session_id"].as_str().unwrap());
    let (_, stats) = call(&app, "GET", &uri, None, None).await;
    assert_eq!(stats["trace_count"], 1);
}

#[tokio::test]
async fn ui_directory_is_served_next_to_the_api() {
    let ui = TempDir::new().unwrap();
    std::fs::write(ui.path().join("index.html"), "<h1>nrts</h1>").unwrap();
    let h = Harness::new(ServerConfig {
        ui_dir: Some(ui.path().to_path_buf()),
        ..ServerConfig::default()
    });
    let app = h.app();
    let resp = app
        .clone()
        .oneshot(Request::get("/index.html").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let (status, _) = call(&app, "POST", "/api/v1/sessions", None, None).await;
    assert_eq!(status, StatusCode::CREATED);

    let bare = Harness::new(ServerConfig::default()).app();
    let (status, body) = call(&bare, "GET", "/index.html", None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error_code"], "not_found");
}
