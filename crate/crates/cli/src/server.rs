//! HTTP service over one or more read-only index snapshots.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tokio::net::TcpListener;
use tokvec::index::Index;

use crate::wire::{error_kind, parse_strict, ErrorBody, SearchRequest, SearchResponse};

/// Maps index names to snapshot directories.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MountConfig {
    pub indexes: BTreeMap<String, PathBuf>,
}

impl MountConfig {
    pub fn single(name: impl Into<String>, dir: impl Into<PathBuf>) -> Self {
        Self {
            indexes: BTreeMap::from([(name.into(), dir.into())]),
        }
    }

    /// Reads a JSON config; relative paths resolve against the config's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let mut config: Self = parse_strict(&text).map_err(|e| anyhow::anyhow!("{}: {}", path.display(), e.message))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for dir in config.indexes.values_mut() {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(config)
    }
}

#[derive(Debug, Default)]
pub struct AppState {
    pub indexes: BTreeMap<String, Arc<Index>>,
}

impl AppState {
    pub fn open(config: &MountConfig) -> tokvec::Result<Self> {
        let mut indexes = BTreeMap::new();
        for (name, dir) in &config.indexes {
            let index = Index::open_snapshot(dir)?;
            tracing::info!(name, dir = %dir.display(), n = index.len(), "mounted index");
            indexes.insert(name.clone(), Arc::new(index));
        }
        Ok(Self { indexes })
    }

    pub fn with_index(name: impl Into<String>, index: Index) -> Self {
        Self {
            indexes: BTreeMap::from([(name.into(), Arc::new(index))]),
        }
    }
}

struct ApiError(StatusCode, ErrorBody);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<tokvec::Error> for ApiError {
    fn from(err: tokvec::Error) -> Self {
        use tokvec::Error::*;
        let status = match &err {
            DimensionMismatch { .. } | NonFinite { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            InvalidParameter(_) | UnknownField(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!(error = %err, "search failed");
        }
        ApiError(
            status,
            ErrorBody {
                error: error_kind(&err).into(),
                message: err.to_string(),
                path: None,
            },
        )
    }
}

fn lookup(state: &AppState, name: &str) -> Result<Arc<Index>, ApiError> {
    state.indexes.get(name).cloned().ok_or_else(|| {
        ApiError(
            StatusCode::NOT_FOUND,
            ErrorBody {
                error: "unknown_index".into(),
                message: format!("no index named `{name}`"),
                path: None,
            },
        )
    })
}

async fn search_handler(
    State(state): State<Arc<AppState>>,
    UrlPath(name): UrlPath<String>,
    body: Bytes,
) -> Result<Json<SearchResponse>, ApiError> {
    let index = lookup(&state, &name)?;
    let request: SearchRequest = parse_strict(&body).map_err(|e| ApiError(StatusCode::BAD_REQUEST, e))?;
    let query = request.to_query();
    let result = tokio::task::spawn_blocking(move || {
        let start = Instant::now();
        tokvec::search::search(&index, &query).map(|r| (r, start.elapsed()))
    })
    .await
    .map_err(|e| {
        ApiError(
            StatusCode::INTERNAL_SERVER_ERROR,
            ErrorBody {
                error: "internal".into(),
                message: e.to_string(),
                path: None,
            },
        )
    })?;
    let (result, took) = result?;
    Ok(Json(SearchResponse::from_result(result, took.as_secs_f64() * 1e3)))
}

async fn stats_handler(
    State(state): State<Arc<AppState>>,
    UrlPath(name): UrlPath<String>,
) -> Result<Json<tokvec::index::IndexStats>, ApiError> {
    Ok(Json(lookup(&state, &name)?.stats()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/indexes/{name}/search", post(search_handler))
        .route("/indexes/{name}/stats", get(stats_handler))
        .with_state(Arc::new(state))
}

/// Serves until the listener fails or ctrl-c arrives.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
