//! HTTP API over a loaded [`HeadlineStore`].
//!
//! | Method | Path              | Body                                   |
//! |--------|-------------------|----------------------------------------|
//! | POST   | `/v1/features`    | [`FeaturesRequest`] → [`FeaturesResponse`] |
//! | POST   | `/v1/annotations` | [`AnnotationsRequest`] → [`AnnotationsResponse`] |
//! | GET    | `/v1/health`      | → [`HealthResponse`]                   |
//!
//! Errors are `{"error": {"code", "message", "path"}}` where `path` names
//! the offending request field when one is known.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use annotator_core::detector::{detect_features, DetectOptions, ExtremumKind};
use annotator_core::error::{DetectError, ModelError, RecommendError, StoreError};
use annotator_core::model::{normalize_series, DataPoint, Feature, Granularity, TimeSeries};
use annotator_core::recommender::{get_annotations, ScoredHeadline};
use annotator_core::store::{load_store, HeadlineStore};
use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub const DEFAULT_BODY_LIMIT: usize = 2 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub store_path: PathBuf,
    /// Maximum request body size in bytes.
    pub body_limit: usize,
    /// Origins allowed to call the API from a browser. Empty disables CORS.
    pub cors_origins: Vec<String>,
}

impl ServiceConfig {
    pub fn new(listen: SocketAddr, store_path: impl Into<PathBuf>) -> Self {
        Self {
            listen,
            store_path: store_path.into(),
            body_limit: DEFAULT_BODY_LIMIT,
            cors_origins: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("cannot load store: {0}")]
    Store(#[from] StoreError),
    #[error("invalid CORS origin {0:?}")]
    CorsOrigin(String),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

#[derive(Clone)]
pub struct AppState {
    store: Arc<HeadlineStore>,
}

impl AppState {
    pub fn new(store: HeadlineStore) -> Self {
        Self { store: Arc::new(store) }
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        load_store(path).map(Self::new)
    }

    pub fn store(&self) -> &HeadlineStore {
        &self.store
    }
}

/// Series as sent over the wire. Dates are ISO `YYYY-MM-DD`; samples are
/// snapped to their granularity and sorted before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesPayload {
    pub points: Vec<DataPoint>,
    pub granularity: Granularity,
    #[serde(default)]
    pub keywords: Vec<String>,
}

impl SeriesPayload {
    pub fn from_series(series: &TimeSeries) -> Self {
        Self {
            points: series.points().to_vec(),
            granularity: series.granularity(),
            keywords: series.keywords().to_vec(),
        }
    }

    pub fn to_series(&self) -> Result<TimeSeries, ModelError> {
        normalize_series(&self.points, self.granularity, self.keywords.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeaturesRequest {
    pub series: SeriesPayload,
    pub kind: ExtremumKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_prominence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesResponse {
    pub features: Vec<Feature>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationsRequest {
    pub series: SeriesPayload,
    pub target: Feature,
    pub context: Vec<Feature>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationsResponse {
    pub annotations: Vec<ScoredHeadline>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub store_record_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub error: ErrorBody,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl ToString, path: Option<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.to_string(),
                path,
            },
        }
    }

    pub fn status(&self) -> StatusCode {
        self.status
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorEnvelope { error: self.body })).into_response()
    }
}

impl From<BytesRejection> for ApiError {
    fn from(rejection: BytesRejection) -> Self {
        let status = rejection.status();
        let code = if status == StatusCode::PAYLOAD_TOO_LARGE {
            "payload_too_large"
        } else {
            "bad_body"
        };
        Self::new(status, code, rejection.body_text(), None)
    }
}

fn series_error(e: ModelError) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, "invalid_series", e, Some("series".into()))
}

impl From<DetectError> for ApiError {
    fn from(e: DetectError) -> Self {
        let path = match e {
            DetectError::InvalidMaxCount => Some("max_count".into()),
            DetectError::InvalidThreshold => Some("min_prominence".into()),
            DetectError::UnsupportedKind => Some("kind".into()),
            _ => Some("series".into()),
        };
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", e, path)
    }
}

impl From<RecommendError> for ApiError {
    fn from(e: RecommendError) -> Self {
        let (status, code, path) = match e {
            RecommendError::EmptyKeywords => (StatusCode::UNPROCESSABLE_ENTITY, "empty_keywords", "series.keywords"),
            RecommendError::EmptyContext => (StatusCode::UNPROCESSABLE_ENTITY, "empty_context", "context"),
            RecommendError::TargetInContext => (StatusCode::BAD_REQUEST, "target_in_context", "context"),
            _ => (StatusCode::BAD_REQUEST, "invalid_request", "target"),
        };
        Self::new(status, code, e, Some(path.into()))
    }
}

fn parse_body<T: DeserializeOwned>(body: Result<Bytes, BytesRejection>) -> Result<T, ApiError> {
    let bytes = body?;
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = (path != ".").then_some(path);
        let inner = e.into_inner();
        let code = if inner.is_data() {
            "schema_violation"
        } else {
            "invalid_json"
        };
        ApiError::new(StatusCode::BAD_REQUEST, code, inner, path)
    })
}

/// Library computation behind `POST /v1/features`.
pub fn compute_features(req: &FeaturesRequest) -> Result<FeaturesResponse, ApiError> {
    let series = req.series.to_series().map_err(series_error)?;
    let options = DetectOptions {
        max_count: req.max_count,
        min_prominence: req.min_prominence,
    };
    let features = detect_features(&series, req.kind, options)?;
    Ok(FeaturesResponse { features })
}

/// Library computation behind `POST /v1/annotations`.
pub fn compute_annotations(req: &AnnotationsRequest, store: &HeadlineStore) -> Result<AnnotationsResponse, ApiError> {
    let series = req.series.to_series().map_err(series_error)?;
    let annotations = get_annotations(&req.target, &req.context, &series, store)?;
    Ok(AnnotationsResponse { annotations })
}

async fn features(body: Result<Bytes, BytesRejection>) -> Result<Json<FeaturesResponse>, ApiError> {
    let req: FeaturesRequest = parse_body(body)?;
    compute_features(&req).map(Json)
}

async fn annotations(
    State(state): State<AppState>,
    body: Result<Bytes, BytesRejection>,
) -> Result<Json<AnnotationsResponse>, ApiError> {
    let req: AnnotationsRequest = parse_body(body)?;
    compute_annotations(&req, &state.store).map(Json)
}

async fn health(State(state): State<AppState>) -> Json<HealthResponse> {
    Json(HealthResponse {
        status: "ok".into(),
        store_record_count: state.store.len(),
    })
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint", None)
}

fn cors_layer(origins: &[String]) -> Result<CorsLayer, StartupError> {
    let origins = origins
        .iter()
        .map(|o| HeaderValue::from_str(o).map_err(|_| StartupError::CorsOrigin(o.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CorsLayer::new()
        .allow_origin(AllowOrigin::list(origins))
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]))
}

pub fn router(state: AppState, config: &ServiceConfig) -> Result<Router, StartupError> {
    let mut app = Router::new()
        .route("/v1/features", post(features))
        .route("/v1/annotations", post(annotations))
        .route("/v1/health", get(health))
        .fallback(not_found)
        .layer(DefaultBodyLimit::max(config.body_limit))
        .with_state(state);
    if !config.cors_origins.is_empty() {
        app = app.layer(cors_layer(&config.cors_origins)?);
    }
    Ok(app)
}

/// Loads the store and serves until ctrl-c.
///
/// Fails before binding if the store cannot be loaded.
pub async fn serve(config: ServiceConfig) -> Result<(), StartupError> {
    let state = AppState::load(&config.store_path)?;
    log::info!(
        "loaded {} records from {}",
        state.store().len(),
        config.store_path.display()
    );
    let app = router(state, &config)?;
    let listener = tokio::net::TcpListener::bind(config.listen)
        .await
        .map_err(|source| StartupError::Bind {
            addr: config.listen,
            source,
        })?;
    log::info!("listening on {}", config.listen);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(StartupError::Serve)
}
