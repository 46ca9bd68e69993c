//! HTTP front end for trace ingestion, scoring, and session statistics.
//!
//! | method | path                          | body / result                  |
//! |--------|-------------------------------|--------------------------------|
//! | POST   | `/api/v1/sessions`            | → `{session_id}`               |
//! | POST   | `/api/v1/traces`              | wire trace → [`TraceAccepted`] |
//! | GET    | `/api/v1/sessions/{id}/stats` | → session statistics           |
//! | PUT    | `/api/v1/gold`                | bundle → `{revision}`          |
//! | GET    | `/api/v1/gold`                | → [`GoldResponse`]             |
//!
//! Failures carry an [`ErrorBody`]. The only state lives in the store.

mod clock;
mod error;

use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::SubsecRound;
use nrts_core::store::PutOutcome;
use nrts_core::{
    score_payload, BundleDocument, DistanceConfig, DocumentStore, FileDocumentStore,
    GoldStandard, PhaseReport, SessionId, SessionStats, SessionStore, StoreError, WireTrace,
};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

pub use clock::{Clock, SteppingClock, SystemClock};
pub use error::{ApiError, ErrorBody};

pub type Store = SessionStore<Box<dyn DocumentStore>>;

pub fn open_store(dir: impl Into<PathBuf>) -> Result<Store, StoreError> {
    Ok(SessionStore::new(Box::new(FileDocumentStore::open(dir)?)))
}

/// Installs `gold` unless it is already the active revision.
pub fn bootstrap_gold(store: &Store, gold: &GoldStandard) -> Result<u64, StoreError> {
    match store.active_gold()? {
        Some((rev, active)) if *active == *gold => Ok(rev),
        _ => store.put_gold(gold),
    }
}

#[derive(Debug, Clone, Default)]
pub struct ServerConfig {
    pub distance: DistanceConfig,
    /// Required as `Authorization: Bearer <token>` on gold uploads.
    pub admin_token: Option<String>,
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: SessionId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceAccepted {
    pub session_id: SessionId,
    pub trace_id: String,
    pub distance: f64,
    pub percent_display: u8,
    pub phase_report: Vec<PhaseReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldInstalled {
    pub revision: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldResponse {
    pub revision: u64,
    pub bundle: BundleDocument,
}

struct Inner {
    store: Store,
    config: ServerConfig,
    clock: Arc<dyn Clock>,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(store: Store, config: ServerConfig, clock: Arc<dyn Clock>) -> Self {
        Self(Arc::new(Inner { store, config, clock }))
    }

    pub fn store(&self) -> &Store {
        &self.0.store
    }
}

async fn blocking<T: Send + 'static>(
    state: &AppState,
    job: impl FnOnce(&Inner) -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    let inner = state.0.clone();
    tokio::task::spawn_blocking(move || job(&inner))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/stats", get(session_stats))
        .route("/traces", post(submit_trace))
        .route("/gold", get(current_gold).put(install_gold));
    let app = Router::new().nest("/api/v1", api);
    let app = match &state.0.config.ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.fallback(|| async {
            ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
        }),
    };
    app.with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

async fn create_session(
    State(state): State<AppState>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let created = blocking(&state, |s| {
        let id = SessionId::mint();
        s.store.create_session(&id, s.clock.now())?;
        Ok(SessionCreated { session_id: id })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn session_stats(
    State(state): State<AppState>,
    Path(raw): Path<String>,
) -> Result<Json<SessionStats>, ApiError> {
    let id: SessionId = raw.parse().map_err(|_| ApiError::bad_session_id(&raw))?;
    let stats = blocking(&state, move |s| Ok(s.store.get_stats(&id)?)).await?;
    Ok(Json(stats))
}

async fn submit_trace(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<Json<TraceAccepted>, ApiError> {
    let wire: WireTrace = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_json", e.to_string()))?;
    let accepted = blocking(&state, move |s| {
        let (revision, gold) = s.store.active_gold()?.ok_or_else(ApiError::no_gold)?;
        let mut trace = wire.into_trace().map_err(ApiError::invalid_trace)?;
        let session_id = trace.session_id.get_or_insert_with(SessionId::mint).clone();
        if trace.recorded_at.is_none() {
            trace.recorded_at = Some(s.clock.now().trunc_subsecs(3));
        }
        let (payload, result) = score_payload(&trace, &gold, &s.config.distance)?;
        let PutOutcome { trace_id, created } =
            s.store.put_trace(&trace, &result, revision, s.config.distance)?;
        tracing::info!(%session_id, %trace_id, created, distance = payload.distance, "trace scored");
        Ok(TraceAccepted {
            session_id,
            trace_id,
            distance: payload.distance,
            percent_display: payload.percent_display,
            phase_report: payload.phase_report,
        })
    })
    .await?;
    Ok(Json(accepted))
}

fn authorized(config: &ServerConfig, headers: &HeaderMap) -> bool {
    let Some(token) = &config.admin_token else {
        return true;
    };
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .is_some_and(|given| given == token)
}

async fn install_gold(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<GoldInstalled>, ApiError> {
    if !authorized(&state.0.config, &headers) {
        return Err(ApiError::new(
            StatusCode::FORBIDDEN,
            "forbidden",
            "a valid admin token is required to change the gold standard",
        ));
    }
    let doc: BundleDocument = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_json", e.to_string()))?;
    let gold = GoldStandard::from_document(doc)?;
    let revision = blocking(&state, move |s| Ok(s.store.put_gold(&gold)?)).await?;
    tracing::info!(revision, "gold installed");
    Ok(Json(GoldInstalled { revision }))
}

async fn current_gold(State(state): State<AppState>) -> Result<Json<GoldResponse>, ApiError> {
    let (revision, gold) = blocking(&state, |s| {
        s.store.active_gold()?.ok_or_else(|| {
            ApiError::new(StatusCode::NOT_FOUND, "no_gold", "no gold standard is installed")
        })
    })
    .await?;
    Ok(Json(GoldResponse {
        revision,
        bundle: gold.to_document(),
    }))
}
