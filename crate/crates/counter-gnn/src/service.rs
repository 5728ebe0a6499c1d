//! JSON HTTP API over a registry of trained models.
//!
//! | route | body / query | response |
//! |-------|--------------|----------|
//! | `GET /health` | | status and model versions |
//! | `GET /models` | | model shapes and versions |
//! | `GET /frames` | `dataset`, `offset`, `limit` | a page of labeled frames |
//! | `POST /predict` | `{model, frame}` or `{model, graph}` | one probability per model (`"all"` for every model) |
//! | `POST /whatif` | `{model, frame, rotations, sweep?}` | base/new probability, delta in percentage points |
//! | `GET /importance` | `model` | stored permutation importance report |
//!
//! Errors are `{code, message, field?}`. Every response carries the
//! `x-model-version` header, a digest of the registry's model versions, and
//! model-specific bodies also carry that model's own version.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Query, Request, State};
use axum::http::{HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use counter_gnn_core::detector::LabeledFrame;
use counter_gnn_core::gnn::{predict, ModelParams};
use counter_gnn_core::graph::{GraphOptions, GraphSample};
use counter_gnn_core::importance::ImportanceReport;
use counter_gnn_core::tracking::PitchSpec;
use counter_gnn_core::whatif::{joint_whatif, sweep_rotations, FrameModel, Rotation, SweepEntry, DEFAULT_STEP};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ServiceConfig;
use crate::error::{Error, Result};
use crate::io::dataset::SampleLine;
use crate::io::frames::{load_labeled_frames, LabeledFrameLine};
use crate::io::read_json;
use crate::io::weights::load_weights;
use crate::pipeline::graph_options_for;

pub const VERSION_HEADER: &str = "x-model-version";

#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub params: ModelParams,
    pub version: String,
    pub options: GraphOptions,
    pub path: PathBuf,
}

/// Immutable snapshot of everything the service serves.
#[derive(Debug, Clone)]
pub struct Registry {
    pub models: BTreeMap<String, LoadedModel>,
    pub datasets: BTreeMap<String, Vec<LabeledFrame>>,
    pub importance: BTreeMap<String, ImportanceReport>,
    pub pitch: PitchSpec,
    /// Digest over all model names and versions.
    pub fingerprint: String,
}

impl Registry {
    /// Load every configured file. Any bad weight file fails the whole load.
    pub fn load(config: &ServiceConfig, pitch: PitchSpec) -> Result<Self> {
        if config.models.is_empty() {
            return Err(Error::Config("service needs at least one model".into()));
        }
        let mut models = BTreeMap::new();
        for (name, path) in &config.models {
            if name == "all" {
                return Err(Error::Config("`all` is reserved and cannot name a model".into()));
            }
            let (params, version) = load_weights(path)?;
            let options = graph_options_for(params.dims())?;
            models.insert(
                name.clone(),
                LoadedModel {
                    params,
                    version,
                    options,
                    path: path.clone(),
                },
            );
        }
        let datasets = config
            .datasets
            .iter()
            .map(|(name, path)| Ok((name.clone(), load_labeled_frames(path, &pitch)?)))
            .collect::<Result<_>>()?;
        let mut importance = BTreeMap::new();
        for (name, path) in &config.importance {
            if !models.contains_key(name) {
                return Err(Error::Config(format!("importance report for unknown model `{name}`")));
            }
            importance.insert(name.clone(), read_json::<ImportanceReport>(path)?);
        }
        let mut h = Sha256::new();
        for (name, m) in &models {
            h.update(name.as_bytes());
            h.update(b"=");
            h.update(m.version.as_bytes());
            h.update(b";");
        }
        let fingerprint = h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect();
        Ok(Registry {
            models,
            datasets,
            importance,
            pitch,
            fingerprint,
        })
    }
}

/// Shared handle; reloading swaps the snapshot atomically while in-flight
/// requests keep the one they started with.
#[derive(Clone)]
pub struct AppState {
    registry: Arc<RwLock<Arc<Registry>>>,
    config: Arc<ServiceConfig>,
}

impl AppState {
    pub fn new(config: ServiceConfig, pitch: PitchSpec) -> Result<Self> {
        let registry = Registry::load(&config, pitch)?;
        Ok(AppState {
            registry: Arc::new(RwLock::new(Arc::new(registry))),
            config: Arc::new(config),
        })
    }

    pub fn snapshot(&self) -> Arc<Registry> {
        self.registry.read().expect("registry lock").clone()
    }

    /// Re-read all files; on failure the current registry stays in place.
    pub fn reload(&self) -> Result<()> {
        let pitch = self.snapshot().pitch;
        let fresh = Arc::new(Registry::load(&self.config, pitch)?);
        *self.registry.write().expect("registry lock") = fresh;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub field: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ApiErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ApiErrorBody {
                code: code.into(),
                message: message.into(),
                field: None,
            },
        }
    }

    fn field(mut self, field: impl Into<String>) -> Self {
        self.body.field = Some(field.into());
        self
    }

    fn unknown_model(name: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_model", format!("no model named `{name}`")).field("model")
    }
}

impl From<counter_gnn_core::Error> for ApiError {
    fn from(e: counter_gnn_core::Error) -> Self {
        use counter_gnn_core::Error as E;
        let message = e.to_string();
        match e {
            E::WidthMismatch { .. } => ApiError::new(StatusCode::BAD_REQUEST, "width_mismatch", message),
            E::UnknownPlayer(_) | E::DuplicatePlayer(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_rotation", message).field("rotations")
            }
            E::InvalidFrame(_) | E::NonFinite(_) | E::ShapeMismatch { .. } | E::Empty(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_frame", message)
            }
            E::InvalidConfig(_) => ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", message),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

/// Parse a JSON body, reporting the path of the first bad field.
fn parse_body<T: DeserializeOwned>(body: std::result::Result<Bytes, BytesRejection>) -> std::result::Result<T, ApiError> {
    let bytes = body.map_err(|e| ApiError::new(e.status(), "invalid_request", e.body_text()))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", "body is not UTF-8"))?;
    crate::io::parse_json(text).map_err(|(field, message)| {
        let e = ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", message);
        match field {
            Some(f) => e.field(f),
            None => e,
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub name: String,
    pub version: String,
    pub node_width: usize,
    pub edge_width: usize,
    pub dense_width: usize,
    pub layers: usize,
    pub gender_aware: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub version: String,
    pub models: Vec<ModelInfo>,
}

fn model_infos(reg: &Registry) -> Vec<ModelInfo> {
    reg.models
        .iter()
        .map(|(name, m)| {
            let d = m.params.dims();
            ModelInfo {
                name: name.clone(),
                version: m.version.clone(),
                node_width: d.node_width,
                edge_width: d.edge_width,
                dense_width: d.dense_width,
                layers: d.layers,
                gender_aware: m.options.gender_aware,
            }
        })
        .collect()
}

async fn health(State(state): State<AppState>) -> Json<HealthResponse> {
    let reg = state.snapshot();
    Json(HealthResponse {
        status: "ok".into(),
        version: reg.fingerprint.clone(),
        models: model_infos(&reg),
    })
}

async fn models(State(state): State<AppState>) -> Json<HealthResponse> {
    health(State(state)).await
}

#[derive(Debug, Deserialize)]
struct FramesQuery {
    dataset: String,
    #[serde(default)]
    offset: usize,
    limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramesResponse {
    pub dataset: String,
    pub version: String,
    pub offset: usize,
    pub total: usize,
    pub frames: Vec<LabeledFrameLine>,
}

async fn frames(
    State(state): State<AppState>,
    query: std::result::Result<Query<FramesQuery>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<FramesResponse> {
    let Query(q) = query.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.body_text()))?;
    let reg = state.snapshot();
    let all = reg.datasets.get(&q.dataset).ok_or_else(|| {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_dataset", format!("no dataset named `{}`", q.dataset))
            .field("dataset")
    })?;
    let cap = state.config.max_frames_per_page;
    let limit = q.limit.unwrap_or(cap).min(cap);
    let frames = all
        .iter()
        .skip(q.offset)
        .take(limit)
        .map(LabeledFrameLine::from_labeled)
        .collect();
    Ok(Json(FramesResponse {
        dataset: q.dataset,
        version: reg.fingerprint.clone(),
        offset: q.offset,
        total: all.len(),
        frames,
    }))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub model: String,
    #[serde(default)]
    pub frame: Option<LabeledFrameLine>,
    /// A prebuilt graph instead of a frame.
    #[serde(default)]
    pub graph: Option<SampleLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub model: String,
    pub version: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub version: String,
    pub predictions: Vec<Prediction>,
}

fn selected<'a>(reg: &'a Registry, name: &str) -> std::result::Result<Vec<(&'a String, &'a LoadedModel)>, ApiError> {
    if name == "all" {
        return Ok(reg.models.iter().collect());
    }
    reg.models
        .get_key_value(name)
        .map(|kv| vec![kv])
        .ok_or_else(|| ApiError::unknown_model(name))
}

fn labeled(reg: &Registry, line: &LabeledFrameLine) -> std::result::Result<LabeledFrame, ApiError> {
    line.to_labeled(&reg.pitch)
        .map_err(|e| ApiError::from(e).field("frame"))
}

fn graph_for(line: &SampleLine, width: usize) -> std::result::Result<GraphSample, ApiError> {
    let found = line.nodes.first().map_or(0, Vec::len);
    if found != width {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "width_mismatch",
            format!("graph node feature width {found} does not match model width {width}"),
        )
        .field("graph.nodes"));
    }
    line.clone()
        .into_sample(width)
        .map_err(|e| ApiError::from(e).field("graph"))
}

async fn predict_handler(
    State(state): State<AppState>,
    body: std::result::Result<Bytes, BytesRejection>,
) -> ApiResult<PredictResponse> {
    let req: PredictRequest = parse_body(body)?;
    let reg = state.snapshot();
    let models = selected(&reg, &req.model)?;
    let frame = match (&req.frame, &req.graph) {
        (Some(f), None) => Some(labeled(&reg, f)?),
        (None, Some(_)) => None,
        _ => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "invalid_request",
                "exactly one of `frame` and `graph` is required",
            ))
        }
    };
    let mut predictions = Vec::with_capacity(models.len());
    for (name, m) in models {
        let probability = match (&frame, &req.graph) {
            (Some(f), _) => FrameModel {
                params: &m.params,
                pitch: reg.pitch,
                options: m.options,
            }
            .predict_frame(f)?,
            (None, Some(g)) => predict(&m.params, &graph_for(g, m.params.dims().node_width)?)?,
            (None, None) => unreachable!("checked above"),
        };
        predictions.push(Prediction {
            model: name.clone(),
            version: m.version.clone(),
            probability,
        });
    }
    Ok(Json(PredictResponse {
        version: reg.fingerprint.clone(),
        predictions,
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub player_id: String,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub model: String,
    pub frame: LabeledFrameLine,
    #[serde(default)]
    pub rotations: Vec<Rotation>,
    #[serde(default)]
    pub sweep: Option<SweepRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResponse {
    pub model: String,
    pub version: String,
    pub base_probability: f64,
    pub new_probability: f64,
    pub delta_percentage_points: f64,
    /// Sweep of one player's direction on top of `rotations`; deltas are
    /// against the unmodified frame.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sweep: Option<Vec<SweepEntry>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub best: Option<SweepEntry>,
}

async fn whatif_handler(
    State(state): State<AppState>,
    body: std::result::Result<Bytes, BytesRejection>,
) -> ApiResult<WhatIfResponse> {
    let req: WhatIfRequest = parse_body(body)?;
    let reg = state.snapshot();
    let m = reg.models.get(&req.model).ok_or_else(|| ApiError::unknown_model(&req.model))?;
    let frame = labeled(&reg, &req.frame)?;
    let model = FrameModel {
        params: &m.params,
        pitch: reg.pitch,
        options: m.options,
    };
    let joint = joint_whatif(&model, &frame, &req.rotations)?;
    let mut response = WhatIfResponse {
        model: req.model.clone(),
        version: m.version.clone(),
        base_probability: joint.base_probability,
        new_probability: joint.new_probability,
        delta_percentage_points: joint.delta_percentage_points,
        sweep: None,
        best: None,
    };
    if let Some(s) = &req.sweep {
        let mut moved = frame.clone();
        for r in &req.rotations {
            moved.frame = counter_gnn_core::whatif::rotate_velocity(&moved.frame, &r.player_id, r.degrees)?;
        }
        let swept = sweep_rotations(&model, &moved, &s.player_id, s.step).map_err(|e| {
            let field = if matches!(e, counter_gnn_core::Error::UnknownPlayer(_)) {
                "sweep.player_id"
            } else {
                "sweep.step"
            };
            ApiError::from(e).field(field)
        })?;
        let base = joint.base_probability;
        let rebase = |e: SweepEntry| SweepEntry {
            delta_percentage_points: 100.0 * (e.probability - base),
            ..e
        };
        response.best = swept.best.map(rebase);
        response.sweep = Some(swept.sweep.into_iter().map(rebase).collect());
    }
    Ok(Json(response))
}

#[derive(Debug, Deserialize)]
struct ImportanceQuery {
    model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceResponse {
    pub model: String,
    pub version: String,
    pub report: ImportanceReport,
}

async fn importance_handler(
    State(state): State<AppState>,
    query: std::result::Result<Query<ImportanceQuery>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<ImportanceResponse> {
    let Query(q) = query.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.body_text()))?;
    let reg = state.snapshot();
    let m = reg.models.get(&q.model).ok_or_else(|| ApiError::unknown_model(&q.model))?;
    let report = reg.importance.get(&q.model).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "no_importance",
            format!("no importance report registered for `{}`", q.model),
        )
        .field("model")
    })?;
    Ok(Json(ImportanceResponse {
        model: q.model.clone(),
        version: m.version.clone(),
        report: report.clone(),
    }))
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

async fn stamp_version(State(state): State<AppState>, request: Request, next: Next) -> Response {
    let fingerprint = state.snapshot().fingerprint.clone();
    let mut response = next.run(request).await;
    if let Ok(v) = HeaderValue::from_str(&fingerprint) {
        response.headers_mut().insert(VERSION_HEADER, v);
    }
    response
}

pub fn router(state: AppState) -> Router {
    let limit = state.config.max_body_bytes;
    Router::new()
        .route("/health", get(health))
        .route("/models", get(models))
        .route("/frames", get(frames))
        .route("/predict", post(predict_handler))
        .route("/whatif", post(whatif_handler))
        .route("/importance", get(importance_handler))
        .fallback(fallback)
        .layer(middleware::from_fn_with_state(state.clone(), stamp_version))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Bind and serve until Ctrl-C. On Unix, SIGHUP reloads the registry.
pub async fn serve(config: ServiceConfig, pitch: PitchSpec) -> Result<()> {
    let addr: SocketAddr = config
        .bind
        .parse()
        .map_err(|e| Error::Config(format!("bind address `{}`: {e}", config.bind)))?;
    let state = AppState::new(config, pitch)?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(addr.to_string(), e))?;
    #[cfg(unix)]
    {
        let state = state.clone();
        tokio::spawn(async move {
            use tokio::signal::unix::{signal, SignalKind};
            let Ok(mut hup) = signal(SignalKind::hangup()) else {
                return;
            };
            while hup.recv().await.is_some() {
                if let Err(e) = state.reload() {
                    eprintln!("reload failed, keeping current models: {e}");
                }
            }
        });
    }
    eprintln!("listening on {addr}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(addr.to_string(), e))
}
