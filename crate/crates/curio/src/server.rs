//! The `/v1` HTTP API: config, stored runs, replay and catalogue.
//!
//! The API never launches inference; replay is a pure recomputation over
//! stored signals.

use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;

use curio_core::abstention::ConfigViolation;
use curio_core::evaluation::{evaluate, GroundTruth, VideoVerdict};
use curio_core::{AbstentionConfig, CatalogueIndex, Decision, PipelineResult};

use crate::error::Error;
use crate::io::write_json;
use crate::store::{RunStore, StoredDecision};

pub struct ApiState {
    pub store: RunStore,
    config: RwLock<AbstentionConfig>,
    /// Accepted configs are written here, one writer at a time.
    config_path: Option<PathBuf>,
    write_lock: tokio::sync::Mutex<()>,
    catalogue: Option<CatalogueIndex>,
    ground_truth: Option<GroundTruth>,
}

impl ApiState {
    pub fn new(store: RunStore, config: AbstentionConfig) -> Self {
        ApiState {
            store,
            config: RwLock::new(config),
            config_path: None,
            write_lock: tokio::sync::Mutex::new(()),
            catalogue: None,
            ground_truth: None,
        }
    }

    pub fn with_config_path(mut self, path: PathBuf) -> Self {
        self.config_path = Some(path);
        self
    }

    pub fn with_catalogue(mut self, index: CatalogueIndex) -> Self {
        self.catalogue = Some(index);
        self
    }

    pub fn with_ground_truth(mut self, gt: GroundTruth) -> Self {
        self.ground_truth = Some(gt);
        self
    }

    pub fn config(&self) -> AbstentionConfig {
        self.config.read().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

#[derive(Debug, Serialize)]
struct ApiError {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    violations: Vec<ConfigViolation>,
}

struct Failure(StatusCode, ApiError);

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (status, kind, violations) = match &e {
            Error::NotFound(_) => (StatusCode::NOT_FOUND, "not_found", Vec::new()),
            Error::Config(v) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_config", v.clone()),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal", Vec::new()),
        };
        Failure(
            status,
            ApiError {
                error: kind,
                message: e.to_string(),
                violations,
            },
        )
    }
}

type ApiResult<T> = Result<Json<T>, Failure>;

/// Parses and validates a config body, reporting every offending parameter.
fn parse_config(body: serde_json::Value) -> Result<AbstentionConfig, Failure> {
    let cfg: AbstentionConfig = serde_json::from_value(body).map_err(|e| {
        Failure(
            StatusCode::UNPROCESSABLE_ENTITY,
            ApiError {
                error: "invalid_config",
                message: e.to_string(),
                violations: Vec::new(),
            },
        )
    })?;
    cfg.validate().map_err(|v| Failure::from(Error::Config(v)))?;
    Ok(cfg)
}

async fn get_config(State(s): State<Arc<ApiState>>) -> Json<AbstentionConfig> {
    Json(s.config())
}

async fn put_config(State(s): State<Arc<ApiState>>, Json(body): Json<serde_json::Value>) -> ApiResult<AbstentionConfig> {
    let cfg = parse_config(body)?;
    let _guard = s.write_lock.lock().await;
    if let Some(path) = &s.config_path {
        write_json(path, &cfg)?;
    }
    *s.config.write().unwrap_or_else(|p| p.into_inner()) = cfg.clone();
    Ok(Json(cfg))
}

async fn list_runs(State(s): State<Arc<ApiState>>) -> ApiResult<Vec<crate::store::RunManifest>> {
    Ok(Json(s.store.list_runs()?))
}

async fn get_run(State(s): State<Arc<ApiState>>, Path(id): Path<String>) -> ApiResult<crate::store::RunManifest> {
    Ok(Json(s.store.manifest(&id)?))
}

async fn run_decisions(State(s): State<Arc<ApiState>>, Path(id): Path<String>) -> ApiResult<Vec<StoredDecision>> {
    Ok(Json(s.store.decisions(&id)?))
}

#[derive(Debug, Serialize)]
struct ReplayResponse {
    run_id: String,
    config: AbstentionConfig,
    videos: usize,
    accepts: usize,
    decisions: Vec<StoredDecision>,
    /// Present when the server was started with ground truth.
    #[serde(skip_serializing_if = "Option::is_none")]
    verdicts: Option<Vec<VideoVerdict>>,
}

/// Body: a full or partial config (missing keys take defaults); an empty
/// object or no body replays under the server's current config.
async fn replay(
    State(s): State<Arc<ApiState>>,
    Path(id): Path<String>,
    body: Option<Json<serde_json::Value>>,
) -> ApiResult<ReplayResponse> {
    let cfg = match body {
        Some(Json(v)) if v.as_object().is_some_and(|o| !o.is_empty()) => parse_config(v)?,
        _ => s.config(),
    };
    let decisions = s.store.replay(&id, &cfg)?;
    let verdicts = match &s.ground_truth {
        Some(gt) => {
            let index = s.store.index(&id)?;
            let results: Vec<PipelineResult> = s
                .store
                .results(&id)?
                .into_iter()
                .zip(&decisions)
                .map(|(mut r, d)| {
                    r.decision = d.record.clone();
                    r
                })
                .collect();
            Some(evaluate(&id, &results, gt, &index, &cfg).map_err(Error::from)?.per_video)
        }
        None => None,
    };
    Ok(Json(ReplayResponse {
        run_id: id,
        videos: decisions.len(),
        accepts: decisions.iter().filter(|d| d.record.decision == Decision::Accept).count(),
        config: cfg,
        decisions,
        verdicts,
    }))
}

#[derive(Debug, Serialize)]
struct CatalogueItem {
    id: String,
    title: String,
    artist: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    subject: Option<String>,
    aliases: Vec<String>,
    dedup_key: String,
}

fn catalogue_items(index: &CatalogueIndex) -> Vec<CatalogueItem> {
    index
        .entries
        .iter()
        .map(|e| CatalogueItem {
            id: e.id.to_string(),
            title: e.title_raw.clone(),
            artist: e.artist_raw.clone(),
            subject: e.subject_raw.clone(),
            aliases: e.title_aliases.aliases.iter().map(|a| a.normalised.clone()).collect(),
            dedup_key: e.dedup_key().to_string(),
        })
        .collect()
}

async fn get_catalogue(State(s): State<Arc<ApiState>>) -> ApiResult<Vec<CatalogueItem>> {
    match &s.catalogue {
        Some(index) => Ok(Json(catalogue_items(index))),
        None => Err(Error::NotFound("no catalogue loaded; start the server with --catalogue".into()).into()),
    }
}

async fn run_catalogue(State(s): State<Arc<ApiState>>, Path(id): Path<String>) -> ApiResult<Vec<CatalogueItem>> {
    Ok(Json(catalogue_items(&s.store.index(&id)?)))
}

pub fn router(state: Arc<ApiState>) -> Router {
    Router::new()
        .route("/v1/config", get(get_config).put(put_config))
        .route("/v1/runs", get(list_runs))
        .route("/v1/runs/{id}", get(get_run))
        .route("/v1/runs/{id}/decisions", get(run_decisions))
        .route("/v1/runs/{id}/replay", post(replay))
        .route("/v1/runs/{id}/catalogue", get(run_catalogue))
        .route("/v1/catalogue", get(get_catalogue))
        .with_state(state)
}

pub async fn serve(state: Arc<ApiState>, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
