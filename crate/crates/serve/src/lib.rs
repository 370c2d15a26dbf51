//! JSON-over-HTTP access to trained models: out-of-sample prediction, the
//! λ-path and metadata. Loaded models are immutable; the only shared mutable
//! state is each model's `zbar` cache.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path as FsPath, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lasskit_core::io::{read_dense_csv, ModelBundle, ModelMeta};
use lasskit_core::lass::Diagnostics;
use lasskit_core::oos::{OosModel, OosPrediction, OosQuery, SparseWeights};
use lasskit_core::LassError;
use serde::{Deserialize, Serialize};

/// Header carrying `hit` or `miss` for the `zbar` cache on path requests.
pub const CACHE_HEADER: &str = "x-zbar-cache";

pub struct LoadedModel {
    pub meta: ModelMeta,
    pub diagnostics: Diagnostics,
    pub model: OosModel,
}

#[derive(Clone, Default)]
pub struct AppState {
    models: Arc<RwLock<BTreeMap<String, Arc<LoadedModel>>>>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a bundle under `id` (or its own id). Fails on duplicates.
    pub fn insert(&self, id: Option<String>, bundle: ModelBundle) -> Result<String, ApiError> {
        let id = id.unwrap_or_else(|| bundle.meta.id.clone());
        if id.is_empty() {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, "model id must not be empty"));
        }
        let model = OosModel::new(bundle.z).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
        let mut models = self.models.write().expect("model registry lock");
        if models.contains_key(&id) {
            return Err(ApiError::new(StatusCode::CONFLICT, format!("model {id} is already loaded")));
        }
        let entry = LoadedModel { meta: bundle.meta, diagnostics: bundle.diagnostics, model };
        models.insert(id.clone(), Arc::new(entry));
        Ok(id)
    }

    pub fn load_dir(&self, id: Option<String>, dir: &FsPath) -> Result<String, ApiError> {
        let bundle = ModelBundle::read(dir).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
        self.insert(id, bundle)
    }

    pub fn get(&self, id: &str) -> Result<Arc<LoadedModel>, ApiError> {
        self.models
            .read()
            .expect("model registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no model with id {id}")))
    }

    pub fn ids(&self) -> Vec<String> {
        self.models.read().expect("model registry lock").keys().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }
}

impl From<LassError> for ApiError {
    fn from(e: LassError) -> Self {
        let status = match e {
            LassError::DimensionMismatch(_) | LassError::InvalidArgument(_) => StatusCode::UNPROCESSABLE_ENTITY,
            LassError::Parse { .. } | LassError::Json(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(e.status(), e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.message })).into_response()
    }
}

/// Body of `POST /models`: a bundle directory on the server, or the bundle
/// pieces inline with `z` as CSV text.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadRequest {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub meta: Option<ModelMeta>,
    #[serde(default)]
    pub z_csv: Option<String>,
    #[serde(default)]
    pub diagnostics: Option<Diagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadResponse {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub id: String,
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub rho: Vec<Option<f64>>,
    pub converged: bool,
    pub graph_fingerprint: String,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub w: SparseWeights,
    pub g: Vec<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    #[serde(flatten)]
    pub prediction: OosPrediction,
    pub cache_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathRequest {
    pub w: SparseWeights,
    pub g: Vec<f64>,
    pub lambdas: Vec<f64>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/models", get(list_models).post(load_model))
        .route("/models/{id}", get(model_info))
        .route("/models/{id}/predict", post(predict))
        .route("/models/{id}/path", post(lambda_path))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn list_models(State(state): State<AppState>) -> Json<Vec<String>> {
    Json(state.ids())
}

async fn load_model(
    State(state): State<AppState>,
    body: Result<Json<LoadRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<LoadResponse>), ApiError> {
    let Json(req) = body?;
    let bad = |msg: String| ApiError::new(StatusCode::BAD_REQUEST, msg);
    let id = match (req.path, req.meta, req.z_csv, req.diagnostics) {
        (Some(path), None, None, None) => state.load_dir(req.id, &path)?,
        (None, Some(meta), Some(z_csv), Some(diagnostics)) => {
            let z = read_dense_csv(z_csv.as_bytes()).map_err(|e| bad(format!("z_csv: {e}")))?;
            let bundle = ModelBundle::from_parts(meta, z, diagnostics).map_err(|e| bad(e.to_string()))?;
            state.insert(req.id, bundle)?
        }
        _ => return Err(bad("give either `path` or all of `meta`, `z_csv` and `diagnostics`".into())),
    };
    Ok((StatusCode::CREATED, Json(LoadResponse { id })))
}

async fn model_info(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<ModelInfo>, ApiError> {
    let m = state.get(&id)?;
    Ok(Json(ModelInfo {
        id,
        n: m.meta.n,
        k: m.meta.k,
        lambda: m.meta.lambda,
        rho: m.meta.rho.clone(),
        converged: m.meta.converged,
        graph_fingerprint: m.meta.graph_fingerprint.clone(),
        diagnostics: m.diagnostics.clone(),
    }))
}

/// The library accepts `lambda = 0` (the closed form); over HTTP a query with
/// neighbors must use a positive `lambda`.
fn check_lambda(w: &[(usize, f64)], lambda: f64) -> Result<(), ApiError> {
    let has_neighbors = w.iter().any(|&(_, v)| v != 0.0);
    let ok = (lambda > 0.0 && lambda.is_finite()) || (lambda == 0.0 && !has_neighbors);
    if !ok {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("lambda must be positive and finite, got {lambda}"),
        ));
    }
    Ok(())
}

async fn predict(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<PredictRequest>, JsonRejection>,
) -> Result<Json<PredictResponse>, ApiError> {
    let m = state.get(&id)?;
    let Json(req) = body?;
    check_lambda(&req.w, req.lambda)?;
    let (prediction, cache_hit) = m.model.predict_traced(&OosQuery { w: req.w, g: req.g, lambda: req.lambda })?;
    Ok(Json(PredictResponse { prediction, cache_hit }))
}

async fn lambda_path(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<PathRequest>, JsonRejection>,
) -> Result<(HeaderMap, Json<Vec<OosPrediction>>), ApiError> {
    let m = state.get(&id)?;
    let Json(req) = body?;
    for &l in &req.lambdas {
        check_lambda(&req.w, l)?;
    }
    let (path, hit) = m.model.lambda_path_traced(&req.w, &req.g, &req.lambdas)?;
    let mut headers = HeaderMap::new();
    headers.insert(CACHE_HEADER, HeaderValue::from_static(if hit { "hit" } else { "miss" }));
    Ok((headers, Json(path)))
}
