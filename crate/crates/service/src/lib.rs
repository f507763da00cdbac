//! HTTP/JSON service that the annotation UI drives. Sessions are event logs
//! on disk, so restarting the service loses nothing; every mutation carries
//! the revision the client last saw and is rejected with 409 when stale.

mod error;
mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use skelforge_core::consensus::hints;
use skelforge_core::ladder::{LadderOptions, DEFAULT_K_MAX, DEFAULT_K_MIN};
use skelforge_core::{
    build_ladder_with, export_gt, integrate, simplicity, AnnotationSession, AnnotatorSubmission, BranchId, GtRecord,
    Point, Provenance, Rationale, SessionView,
};

pub use error::ApiError;
pub use store::Store;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    /// Shapes served to annotators, either a flat folder or `masks/` plus
    /// `images/`.
    pub dataset_root: PathBuf,
    /// Exported GT records land here.
    pub export_root: PathBuf,
    /// Session event logs and their ladders.
    pub session_root: PathBuf,
}

impl ServiceConfig {
    /// Sessions default to `<export_root>/sessions`.
    pub fn new(addr: SocketAddr, dataset_root: impl Into<PathBuf>, export_root: impl Into<PathBuf>) -> Self {
        let export_root = export_root.into();
        ServiceConfig {
            addr,
            dataset_root: dataset_root.into(),
            session_root: export_root.join("sessions"),
            export_root,
        }
    }
}

type AppState = Arc<Store>;
type ApiResult<T> = Result<T, ApiError>;

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/shapes", get(list_shapes))
        .route("/shapes/{file}", get(shape_png))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/step", post(step))
        .route("/sessions/{id}/prune", post(prune))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/redo", post(redo))
        .route("/sessions/{id}/restore", post(restore))
        .route("/sessions/{id}/history", get(history))
        .route("/sessions/{id}/export", post(export))
        .route("/integrate", post(integrate_sessions))
        .with_state(store)
}

/// Binds `config.addr` and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let addr = config.addr;
    let store = tokio::task::spawn_blocking(move || Store::open(config)).await??;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn list_shapes(State(store): State<AppState>) -> Json<Vec<String>> {
    Json(store.shape_ids())
}

async fn shape_png(State(store): State<AppState>, Path(file): Path<String>) -> ApiResult<Response> {
    let id = file
        .strip_suffix(".png")
        .ok_or_else(|| ApiError::NotFound(format!("no resource {file}")))?;
    let bytes = store.shape(id)?.to_png_bytes()?;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}

#[derive(Deserialize)]
struct CreateSession {
    shape_id: String,
    annotator_id: String,
    k_min: Option<usize>,
    k_max: Option<usize>,
    fill_holes: Option<bool>,
}

#[derive(Serialize)]
struct LadderSummary {
    k_min: usize,
    k_max: usize,
    fill_holes: bool,
    step_count: usize,
    /// DCE vertex count of every step.
    dce_k: Vec<usize>,
}

#[derive(Serialize)]
struct Created {
    ladder: LadderSummary,
    #[serde(flatten)]
    view: SessionView,
}

async fn create_session(State(store): State<AppState>, Json(req): Json<CreateSession>) -> ApiResult<Response> {
    let shape = store.shape(&req.shape_id)?.clone();
    let options = LadderOptions {
        k_min: req.k_min.unwrap_or(DEFAULT_K_MIN),
        k_max: req.k_max.unwrap_or(DEFAULT_K_MAX),
        fill_holes: req.fill_holes.unwrap_or(true),
    };
    options.validate()?;
    let worker = store.clone();
    let session = tokio::task::spawn_blocking(move || -> ApiResult<_> {
        let ladder = build_ladder_with(&shape, options)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = AnnotationSession::new(id, req.shape_id, req.annotator_id, Arc::new(ladder))?;
        worker.insert(session)
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;
    let session = session.lock().expect("session poisoned");
    let ladder = session.ladder();
    let body = Created {
        ladder: LadderSummary {
            k_min: ladder.options.k_min,
            k_max: ladder.options.k_max,
            fill_holes: ladder.options.fill_holes,
            step_count: ladder.len(),
            dce_k: ladder.dce_k.clone(),
        },
        view: session.view(),
    };
    log::info!("session {} on {} for {}", session.id, session.shape_id, session.annotator_id);
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_session(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let session = store.session(&id)?;
    let view = session.lock().expect("session poisoned").view();
    Ok(Json(view))
}

/// Runs `edit` on the session if `revision` is current, then saves the log.
fn mutate(
    store: &Store,
    id: &str,
    revision: Option<u64>,
    edit: impl FnOnce(&mut AnnotationSession) -> skelforge_core::Result<()>,
) -> ApiResult<Json<SessionView>> {
    let shared = store.session(id)?;
    let mut session = shared.lock().expect("session poisoned");
    if let Some(r) = revision {
        if r != session.revision() {
            return Err(ApiError::Conflict {
                message: format!("revision {r} is stale, session is at {}", session.revision()),
                revision: Some(session.revision()),
            });
        }
    }
    edit(&mut session)?;
    store.persist(&session)?;
    Ok(Json(session.view()))
}

#[derive(Deserialize)]
struct StepRequest {
    direction: i64,
    revision: u64,
}

async fn step(State(store): State<AppState>, Path(id): Path<String>, Json(req): Json<StepRequest>) -> ApiResult<Json<SessionView>> {
    if req.direction != 1 && req.direction != -1 {
        return Err(ApiError::Unprocessable(format!("direction must be +1 or -1, got {}", req.direction)));
    }
    mutate(&store, &id, Some(req.revision), |s| s.step(req.direction))
}

#[derive(Deserialize)]
struct PruneRequest {
    branch_ids: Vec<BranchId>,
    revision: u64,
}

async fn prune(State(store): State<AppState>, Path(id): Path<String>, Json(req): Json<PruneRequest>) -> ApiResult<Json<SessionView>> {
    if req.branch_ids.is_empty() {
        return Err(ApiError::Unprocessable("no branch ids given".into()));
    }
    mutate(&store, &id, Some(req.revision), |s| s.prune(&req.branch_ids))
}

#[derive(Deserialize, Default)]
struct Revision {
    revision: Option<u64>,
}

/// Undo and redo accept an empty body; a revision is checked when present.
fn optional_revision(body: Option<Json<Revision>>) -> Option<u64> {
    body.and_then(|Json(r)| r.revision)
}

async fn undo(State(store): State<AppState>, Path(id): Path<String>, body: Option<Json<Revision>>) -> ApiResult<Json<SessionView>> {
    mutate(&store, &id, optional_revision(body), |s| s.undo())
}

async fn redo(State(store): State<AppState>, Path(id): Path<String>, body: Option<Json<Revision>>) -> ApiResult<Json<SessionView>> {
    mutate(&store, &id, optional_revision(body), |s| s.redo())
}

#[derive(Deserialize)]
struct RestoreRequest {
    index: usize,
    revision: Option<u64>,
}

async fn restore(State(store): State<AppState>, Path(id): Path<String>, Json(req): Json<RestoreRequest>) -> ApiResult<Json<SessionView>> {
    mutate(&store, &id, req.revision, |s| s.restore(req.index))
}

#[derive(Serialize)]
struct History {
    session_id: String,
    revision: u64,
    cursor: usize,
    can_undo: bool,
    can_redo: bool,
    /// `(re, ss)` from the root to the cursor.
    metric_history: Vec<(f64, f64)>,
    entries: Vec<skelforge_core::session::HistoryEntry>,
}

async fn history(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<History>> {
    let shared = store.session(&id)?;
    let s = shared.lock().expect("session poisoned");
    Ok(Json(History {
        session_id: s.id.clone(),
        revision: s.revision(),
        cursor: s.cursor(),
        can_undo: s.can_undo(),
        can_redo: s.can_redo(),
        metric_history: s.metric_history(),
        entries: s.history().to_vec(),
    }))
}

#[derive(Serialize)]
struct Exported {
    manifest: PathBuf,
    re: f64,
    ss: f64,
}

async fn export(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Exported>> {
    let shared = store.session(&id)?;
    let record = shared.lock().expect("session poisoned").to_gt_record(None)?;
    let dir = export_gt(&record, store.config.export_root.join(&id))?;
    Ok(Json(Exported {
        manifest: dir.join("gt.json"),
        re: record.re,
        ss: record.ss,
    }))
}

#[derive(Deserialize)]
struct IntegrateRequest {
    shape_id: String,
    session_ids: Vec<String>,
    /// Also writes the chosen skeleton as a GT record.
    #[serde(default)]
    export: bool,
}

/// One row of the integration table.
#[derive(Serialize)]
struct Hint {
    session_id: String,
    annotator_id: String,
    digest: String,
    votes: usize,
    re: f64,
    ss: f64,
}

#[derive(Serialize)]
struct Integrated {
    shape_id: String,
    width: usize,
    height: usize,
    skeleton: Vec<Point>,
    endpoints: Vec<Point>,
    junctions: Vec<Point>,
    re: f64,
    ss: f64,
    rationale: Rationale,
    /// Short form such as `max_votes(2)`.
    rationale_text: String,
    supporters: Vec<String>,
    hints: Vec<Hint>,
    manifest: Option<PathBuf>,
}

async fn integrate_sessions(State(store): State<AppState>, Json(req): Json<IntegrateRequest>) -> ApiResult<Json<Integrated>> {
    if req.session_ids.is_empty() {
        return Err(ApiError::Unprocessable("no sessions to integrate".into()));
    }
    let mut snapshots = Vec::new();
    for id in &req.session_ids {
        let shared = store.session(id)?;
        let s = shared.lock().expect("session poisoned");
        if s.shape_id != req.shape_id {
            return Err(ApiError::Conflict {
                message: format!("session {id} annotates {}, not {}", s.shape_id, req.shape_id),
                revision: None,
            });
        }
        snapshots.push((id.clone(), s.annotator_id.clone(), s.ladder().clone(), s.current().clone(), s.history()[s.cursor()].clone()));
    }
    let shape = snapshots[0].2.shape.clone();
    if snapshots.iter().any(|s| s.2.shape != shape) {
        return Err(ApiError::Conflict {
            message: "sessions were built from different masks".into(),
            revision: None,
        });
    }
    // a common step 0 lets tied skeletons be merged along its paths
    let superset = snapshots[0].2.steps[0].clone();
    let common = snapshots.iter().all(|s| s.2.steps[0] == superset);
    let subs: Vec<AnnotatorSubmission> = snapshots
        .iter()
        .map(|s| AnnotatorSubmission { annotator_id: s.1.clone(), skeleton: s.3.clone(), re: s.4.re })
        .collect();
    let out = integrate(&subs, &shape, common.then_some(&superset))?;
    let votes = hints(&subs);
    let record = GtRecord::new(
        req.shape_id.clone(),
        &out.skeleton,
        &shape,
        None,
        Provenance {
            annotator_ids: subs.iter().map(|s| s.annotator_id.clone()).collect(),
            k_min: snapshots[0].2.options.k_min,
            k_max: snapshots[0].2.options.k_max,
            rationale: Some(out.rationale.to_string()),
            ..Provenance::default()
        },
    )?;
    let manifest = if req.export {
        let dir = export_gt(&record, store.config.export_root.join("integrated"))?;
        Some(dir.join("gt.json"))
    } else {
        None
    };
    let hints = snapshots
        .iter()
        .map(|s| Hint {
            session_id: s.0.clone(),
            annotator_id: s.1.clone(),
            digest: s.4.digest.clone(),
            votes: votes[&s.4.digest],
            re: s.4.re,
            ss: s.4.ss,
        })
        .collect();
    let re = skelforge_core::reconstruction_error(&out.skeleton, &shape)?;
    Ok(Json(Integrated {
        shape_id: req.shape_id,
        width: shape.width(),
        height: shape.height(),
        skeleton: out.skeleton.points().iter().copied().collect(),
        endpoints: record.endpoints,
        junctions: record.junctions,
        re,
        ss: simplicity(&out.skeleton),
        rationale_text: out.rationale.to_string(),
        rationale: out.rationale,
        supporters: out.supporters,
        hints,
        manifest,
    }))
}
