//! HTTP API over scratchpad runs: asynchronous generation, scene access,
//! optimistic-concurrency transform patches and edits.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/healthz` | liveness |
//! | POST | `/runs` | `{prompt, config?}` → 202 `{run_id}` |
//! | GET | `/runs` | run ids |
//! | GET | `/runs/{id}?wait=S` | status and manifest; long-polls up to S (≤ 30) seconds while running |
//! | GET | `/runs/{id}/scene` | `{revision, scene}` |
//! | GET | `/runs/{id}/renders/{view}` | PNG |
//! | GET | `/runs/{id}/renders/{view}/depth` | raw f32 depth, sidecar in `x-depth-*` headers |
//! | GET | `/runs/{id}/images/{intermediate,final}` | PNG |
//! | PATCH | `/runs/{id}/subjects/{sid}/transform` | `{delta, base_revision}` → `{revision}` |
//! | POST | `/runs/{id}/edits` | `{instruction}` or `{deltas, base_revision?}` → 202 `{edit_id}` |
//! | GET | `/runs/{id}/edits/{n}?wait=S` | edit status |
//! | GET | `/runs/{id}/edits/{n}/images/{before,final,mask,removed}` | PNG |

mod error;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch};
use axum::{Json, Router};
use scratchpad_core::render::output::read_depth;
use scratchpad_core::{serialize_scene, TransformTrs, Vec3};
use scratchpad_pipeline::{BackendKind, EditInput, Pipeline, PipelineError, RunConfig, RunOptions, StageStatus};
use serde::Deserialize;
use serde_json::{json, Value};

pub use error::ApiError;

/// Longest a status request may wait for a change.
pub const LONG_POLL_LIMIT: Duration = Duration::from_secs(30);
const POLL_INTERVAL: Duration = Duration::from_millis(25);

#[derive(Clone, Debug, PartialEq)]
enum Job {
    Running,
    Failed(Value),
}

pub struct AppState {
    mock: Pipeline,
    live: Option<Pipeline>,
    default_config: RunConfig,
    jobs: Mutex<HashMap<String, Job>>,
    edit_jobs: Mutex<HashMap<(String, usize), Job>>,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl AppState {
    /// `mock` serves runs configured with the mock backend, `live` (when
    /// configured) the rest. Both must share one runs directory.
    pub fn new(mock: Pipeline, live: Option<Pipeline>, default_config: RunConfig) -> Self {
        Self {
            mock,
            live,
            default_config,
            jobs: Mutex::new(HashMap::new()),
            edit_jobs: Mutex::new(HashMap::new()),
            locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.mock.runs_root.clone()
    }

    fn pipeline(&self, kind: BackendKind) -> Result<&Pipeline, ApiError> {
        match kind {
            BackendKind::Mock => Ok(&self.mock),
            BackendKind::Live => self.live.as_ref().ok_or_else(|| {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "backend_unavailable", "live backends are not configured")
            }),
        }
    }

    fn pipeline_for_run(&self, run_id: &str) -> Result<&Pipeline, ApiError> {
        let m = self.mock.load(run_id)?.manifest;
        self.pipeline(m.config.backend)
    }

    /// One mutation at a time per run.
    fn lock(&self, run_id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks.lock().expect("lock map").entry(run_id.to_string()).or_default().clone()
    }

    fn job(&self, run_id: &str) -> Option<Job> {
        self.jobs.lock().expect("job map").get(run_id).cloned()
    }

    fn edit_job(&self, run_id: &str, n: usize) -> Option<Job> {
        self.edit_jobs.lock().expect("job map").get(&(run_id.to_string(), n)).cloned()
    }
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/healthz", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/runs", get(list_runs).post(create_run))
        .route("/runs/{id}", get(run_status))
        .route("/runs/{id}/scene", get(get_scene))
        .route("/runs/{id}/renders/{view}", get(get_render))
        .route("/runs/{id}/renders/{view}/depth", get(get_depth))
        .route("/runs/{id}/images/{name}", get(get_image))
        .route("/runs/{id}/subjects/{sid}/transform", patch(patch_transform))
        .route("/runs/{id}/edits", axum::routing::post(create_edit))
        .route("/runs/{id}/edits/{n}", get(edit_status))
        .route("/runs/{id}/edits/{n}/images/{name}", get(get_edit_image))
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: Shared) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

pub async fn bind(addr: SocketAddr) -> std::io::Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(addr).await
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRun {
    prompt: String,
    #[serde(default)]
    config: Option<Value>,
}

async fn create_run(State(st): State<Shared>, payload: Result<Json<CreateRun>, JsonRejection>) -> Result<Response, ApiError> {
    let req = body(payload)?;
    let mut cfg = serde_json::to_value(&st.default_config).expect("config serializes");
    if let Some(over) = req.config {
        merge(&mut cfg, over);
    }
    let config: RunConfig =
        serde_json::from_value(cfg).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_config", e.to_string()))?;
    st.pipeline(config.backend)?;
    let st2 = st.clone();
    let prompt = req.prompt.clone();
    let cfg2 = config.clone();
    let run_id = blocking(move || Ok(st2.pipeline(cfg2.backend)?.create(&prompt, &cfg2)?)).await?;

    let finished = st.mock.load(&run_id)?.manifest.is_finished();
    let start = {
        let mut jobs = st.jobs.lock().expect("job map");
        let running = jobs.get(&run_id) == Some(&Job::Running);
        if !running && !finished {
            jobs.insert(run_id.clone(), Job::Running);
        }
        !running && !finished
    };
    if start {
        let st2 = st.clone();
        let id = run_id.clone();
        tokio::task::spawn_blocking(move || {
            let lock = st2.lock(&id);
            let _guard = lock.blocking_lock();
            let result = st2.pipeline(config.backend).map_err(|e| e.to_string()).and_then(|p| {
                p.resume(&id, &RunOptions::default()).map(drop).map_err(|e| {
                    log::error!("run {id}: {e}");
                    e.to_string()
                })
            });
            let mut jobs = st2.jobs.lock().expect("job map");
            match result {
                Ok(()) => jobs.remove(&id),
                Err(message) => jobs.insert(id, Job::Failed(json!(message))),
            };
        });
    }
    Ok((StatusCode::ACCEPTED, Json(json!({ "run_id": run_id }))).into_response())
}

async fn list_runs(State(st): State<Shared>) -> Result<Json<Value>, ApiError> {
    let st2 = st.clone();
    let ids = blocking(move || Ok(st2.mock.runs()?)).await?;
    Ok(Json(json!({ "runs": ids })))
}

#[derive(Deserialize, Default)]
struct Wait {
    #[serde(default)]
    wait: Option<f64>,
}

impl Wait {
    fn deadline(&self) -> Instant {
        let secs = self.wait.unwrap_or(0.0).clamp(0.0, LONG_POLL_LIMIT.as_secs_f64());
        Instant::now() + Duration::from_secs_f64(secs)
    }
}

async fn run_status(State(st): State<Shared>, Path(id): Path<String>, Query(w): Query<Wait>) -> Result<Json<Value>, ApiError> {
    let deadline = w.deadline();
    loop {
        let job = st.job(&id);
        if job != Some(Job::Running) || Instant::now() >= deadline {
            let m = st.mock.load(&id)?.manifest;
            let (status, error) = match job {
                Some(Job::Running) => ("running", Value::Null),
                Some(Job::Failed(e)) => ("failed", e),
                None if m.is_finished() => ("complete", Value::Null),
                None if m.stages.iter().any(|s| s.status == StageStatus::Failed) => {
                    let e = m.stages.iter().find_map(|s| s.error.clone());
                    ("failed", json!(e))
                }
                None => ("incomplete", Value::Null),
            };
            return Ok(Json(json!({ "run_id": id, "status": status, "error": error, "manifest": m })));
        }
        tokio::time::sleep(POLL_INTERVAL).await;
    }
}

async fn get_scene(State(st): State<Shared>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let st2 = st.clone();
    let (scene, revision) = blocking(move || Ok(st2.mock.current_scene(&id)?)).await?;
    let doc: Value = serde_json::from_slice(&serialize_scene(&scene)).expect("scene JSON");
    Ok(Json(json!({ "revision": revision, "scene": doc })))
}

fn safe_name(s: &str) -> Result<&str, ApiError> {
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        Ok(s)
    } else {
        Err(ApiError::not_found(format!("no such resource {s:?}")))
    }
}

fn read_run_file(st: &AppState, id: &str, rel: &str) -> Result<Vec<u8>, ApiError> {
    st.mock.load(id)?;
    std::fs::read(st.runs_dir().join(id).join(rel)).map_err(|_| ApiError::not_found(format!("{rel} does not exist")))
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

async fn get_render(State(st): State<Shared>, Path((id, view)): Path<(String, String)>) -> Result<Response, ApiError> {
    let rel = format!("renders/{}.png", safe_name(&view)?);
    Ok(png(blocking(move || read_run_file(&st, &id, &rel)).await?))
}

async fn get_depth(State(st): State<Shared>, Path((id, view)): Path<(String, String)>) -> Result<Response, ApiError> {
    let view = safe_name(&view)?.to_string();
    let (sidecar, bytes) = blocking(move || {
        st.mock.load(&id)?;
        let dir = st.runs_dir().join(&id).join("renders");
        let (sidecar, _) = read_depth(&dir, &view).map_err(|_| ApiError::not_found(format!("no depth for view {view:?}")))?;
        let bytes = std::fs::read(dir.join(format!("{view}.depth")))
            .map_err(|_| ApiError::not_found(format!("no depth for view {view:?}")))?;
        Ok((sidecar, bytes))
    })
    .await?;
    let mut h = HeaderMap::new();
    let mut put = |k: &'static str, v: String| {
        h.insert(k, HeaderValue::from_str(&v).expect("ascii header"));
    };
    put("content-type", "application/octet-stream".into());
    put("x-depth-width", sidecar.width.to_string());
    put("x-depth-height", sidecar.height.to_string());
    put("x-depth-format", sidecar.format.clone());
    put("x-depth-convention", sidecar.convention.clone());
    if let (Some(lo), Some(hi)) = (sidecar.min_valid, sidecar.max_valid) {
        put("x-depth-min", lo.to_string());
        put("x-depth-max", hi.to_string());
    }
    Ok((h, bytes).into_response())
}

async fn get_image(State(st): State<Shared>, Path((id, name)): Path<(String, String)>) -> Result<Response, ApiError> {
    if name != "intermediate" && name != "final" {
        return Err(ApiError::not_found(format!("no image {name:?}")));
    }
    let rel = format!("images/{name}.png");
    Ok(png(blocking(move || read_run_file(&st, &id, &rel)).await?))
}

/// Delta fields; omitted parts are identity.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeltaFields {
    #[serde(default)]
    translation: Option<Vec3>,
    #[serde(default)]
    rotation: Option<Vec3>,
    #[serde(default)]
    scale: Option<f64>,
}

impl DeltaFields {
    fn trs(&self) -> TransformTrs {
        TransformTrs {
            translation: self.translation.unwrap_or_else(Vec3::zero),
            rotation: self.rotation.unwrap_or_else(Vec3::zero),
            scale: self.scale.unwrap_or(1.0),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchBody {
    delta: DeltaFields,
    base_revision: u64,
}

async fn patch_transform(
    State(st): State<Shared>,
    Path((id, sid)): Path<(String, String)>,
    payload: Result<Json<PatchBody>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let req = body(payload)?;
    let lock = st.lock(&id);
    let _guard = lock.lock().await;
    let revision = blocking(move || {
        let p = st.pipeline_for_run(&id)?;
        Ok(p.patch_transform(&id, &sid, &req.delta.trs(), req.base_revision)?)
    })
    .await?;
    Ok(Json(json!({ "revision": revision })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DeltaEntry {
    subject: String,
    #[serde(flatten)]
    delta: DeltaFields,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EditBody {
    #[serde(default)]
    instruction: Option<String>,
    #[serde(default)]
    deltas: Option<Vec<DeltaEntry>>,
    #[serde(default)]
    base_revision: Option<u64>,
}

async fn create_edit(
    State(st): State<Shared>,
    Path(id): Path<String>,
    payload: Result<Json<EditBody>, JsonRejection>,
) -> Result<Response, ApiError> {
    let req = body(payload)?;
    let input = match (req.instruction, req.deltas) {
        (Some(text), None) if !text.trim().is_empty() => EditInput::Instruction(text),
        (None, Some(d)) => EditInput::Deltas(d.into_iter().map(|e| (e.subject, e.delta.trs())).collect()),
        _ => return Err(ApiError::bad_request("send either a non-empty instruction or deltas")),
    };
    let lock = st.lock(&id);
    let guard = lock.clone().lock_owned().await;
    let m = st.mock.load(&id)?.manifest;
    if !m.is_finished() {
        return Err(PipelineError::Incomplete(id).into());
    }
    if let Some(base) = req.base_revision {
        if base != m.revision {
            return Err(PipelineError::StaleRevision { base, current: m.revision }.into());
        }
    }
    st.pipeline(m.config.backend)?;
    let number = m.edits.len() + 1;
    st.edit_jobs.lock().expect("job map").insert((id.clone(), number), Job::Running);
    let st2 = st.clone();
    let id2 = id.clone();
    tokio::task::spawn_blocking(move || {
        let _guard = guard;
        let result = st2
            .pipeline(m.config.backend)
            .and_then(|p| p.edit(&id2, &input, req.base_revision).map_err(ApiError::from));
        let mut jobs = st2.edit_jobs.lock().expect("job map");
        match result {
            Ok(out) => {
                debug_assert_eq!(out.number, number);
                jobs.remove(&(id2, number));
            }
            Err(e) => {
                log::warn!("edit {number} of {id2}: {e}");
                let env = json!({ "code": e.code, "message": e.message, "detail": e.detail, "status": e.status.as_u16() });
                jobs.insert((id2, number), Job::Failed(env));
            }
        }
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "edit_id": number }))).into_response())
}

async fn edit_status(
    State(st): State<Shared>,
    Path((id, n)): Path<(String, usize)>,
    Query(w): Query<Wait>,
) -> Result<Json<Value>, ApiError> {
    let deadline = w.deadline();
    loop {
        let job = st.edit_job(&id, n);
        if job != Some(Job::Running) || Instant::now() >= deadline {
            let m = st.mock.load(&id)?.manifest;
            let base = format!("/runs/{id}/edits/{n}/images");
            return match (job, m.edits.iter().find(|e| e.number == n)) {
                (Some(Job::Running), _) => Ok(Json(json!({ "edit_id": n, "status": "running" }))),
                (Some(Job::Failed(err)), _) => Ok(Json(json!({ "edit_id": n, "status": "failed", "error": err }))),
                (None, Some(e)) => Ok(Json(json!({
                    "edit_id": n,
                    "status": "complete",
                    "kind": e.kind,
                    "subjects": e.subjects,
                    "revision": e.revision,
                    "images": {
                        "before": format!("{base}/before"),
                        "after": format!("{base}/final"),
                        "mask": format!("{base}/mask"),
                    },
                }))),
                (None, None) => Err(ApiError::not_found(format!("edit {n} of run {id}"))),
            };
        }
        tokio::time::sleep(POLL_INTERVAL).await;
    }
}

async fn get_edit_image(
    State(st): State<Shared>,
    Path((id, n, name)): Path<(String, usize, String)>,
) -> Result<Response, ApiError> {
    let rel = match name.as_str() {
        "before" if n == 1 => "images/final.png".to_string(),
        "before" if n > 1 => format!("edits/{}/final.png", n - 1),
        "final" | "mask" | "removed" => format!("edits/{n}/{name}.png"),
        _ => return Err(ApiError::not_found(format!("no image {name:?}"))),
    };
    Ok(png(blocking(move || read_run_file(&st, &id, &rel)).await?))
}
