//! JSON request and response bodies shared by the CLI and the HTTP service.

use serde::{Deserialize, Serialize};
use tokvec::corpus::Metadata;
use tokvec::index::Filter;
use tokvec::search::{Query, SearchResult};

pub const DEFAULT_SIZE: usize = 10;
/// The window defaults to this multiple of `size`.
pub const DEFAULT_WINDOW_FACTOR: usize = 10;

fn default_size() -> usize {
    DEFAULT_SIZE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    pub vector: Vec<f64>,
    #[serde(default = "default_size")]
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filters: Vec<Filter>,
}

impl SearchRequest {
    pub fn window(&self) -> usize {
        self.window.unwrap_or(self.size.saturating_mul(DEFAULT_WINDOW_FACTOR))
    }

    pub fn to_query(&self) -> Query {
        Query::new(self.vector.clone(), self.size, self.window()).with_filters(self.filters.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireHit {
    pub id: String,
    pub distance: f64,
    pub overlap_score: u32,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchResponse {
    pub hits: Vec<WireHit>,
    pub exhausted: bool,
    pub took_ms: f64,
}

impl SearchResponse {
    pub fn from_result(result: SearchResult, took_ms: f64) -> Self {
        Self {
            hits: result
                .hits
                .into_iter()
                .map(|h| WireHit {
                    id: h.id,
                    distance: h.distance,
                    overlap_score: h.overlap_score,
                    metadata: h.metadata,
                })
                .collect(),
            exhausted: result.exhausted,
            took_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

/// Short machine-readable name for a core error.
pub fn error_kind(err: &tokvec::Error) -> &'static str {
    use tokvec::Error::*;
    match err {
        Io { .. } => "io",
        Malformed { .. } => "malformed",
        DimensionMismatch { .. } => "dimension_mismatch",
        DuplicateId(_) => "duplicate_id",
        NonFinite { .. } => "non_finite",
        Indivisible { .. } => "indivisible",
        InsufficientPoints { .. } => "insufficient_points",
        InvalidParameter(_) => "invalid_parameter",
        UnknownField(_) => "unknown_field",
        VersionMismatch { .. } => "version_mismatch",
        Checksum(_) => "checksum",
        Corrupted { .. } => "corrupted",
    }
}

/// Parses a JSON body, reporting the path of the offending field on failure.
pub fn parse_strict<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, ErrorBody> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        ErrorBody {
            error: "bad_request".into(),
            message: e.inner().to_string(),
            path: (path != ".").then_some(path),
        }
    })?;
    de.end().map_err(|e| ErrorBody {
        error: "bad_request".into(),
        message: e.to_string(),
        path: None,
    })?;
    Ok(value)
}
