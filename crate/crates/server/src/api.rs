//! Request and response shapes shared by the HTTP routes and the CLI, and
//! the search handler both of them call.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Instant;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use jobmatch_core::explain::{explain, Explanation, Templates};
use jobmatch_core::pipeline::{
    ChannelHits, ChannelWeights, PipelineError, StageTimings, StructuredQuery,
};
use jobmatch_core::rerank::FactorVector;
use jobmatch_core::{
    search, FactorScores, IndexBundle, JobPosting, Level, Location, SearchOutcome, SearchRequest,
    WeightVector,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{ProfileStore, StoreError};

pub const MAX_PAGE_SIZE: usize = 100;
/// Cached search outcomes kept for re-weighting; the cache is emptied when full.
pub const CACHE_CAPACITY: usize = 64;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{field}: {message}")]
    Validation { field: String, message: String },
    #[error("resume text is empty")]
    EmptyInput,
    #[error("unknown {kind} {id:?}")]
    NotFound { kind: &'static str, id: String },
    #[error("index bundle is not loaded yet")]
    NotReady,
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        ApiError::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::Validation { .. } | ApiError::EmptyInput => StatusCode::BAD_REQUEST,
            ApiError::NotFound { .. } => StatusCode::NOT_FOUND,
            ApiError::NotReady => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::Store(_) | ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ApiError::Validation { .. } => "Validation",
            ApiError::EmptyInput => "EmptyInput",
            ApiError::NotFound { .. } => "NotFound",
            ApiError::NotReady => "NotReady",
            ApiError::Store(_) => "Store",
            ApiError::Internal(_) => "Internal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl From<&ApiError> for ErrorBody {
    fn from(e: &ApiError) -> Self {
        ErrorBody {
            error: e.code().to_string(),
            message: match e {
                ApiError::Validation { message, .. } => message.clone(),
                other => other.to_string(),
            },
            field: match e {
                ApiError::Validation { field, .. } => Some(field.clone()),
                _ => None,
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        (self.status(), Json(ErrorBody::from(&self))).into_response()
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::EmptyQuery => {
                ApiError::validation("query", "provide query text or a profile")
            }
            PipelineError::Weights(w) => ApiError::validation("weights", w.to_string()),
        }
    }
}

/// Body of `POST /search`: a pipeline request, optionally naming a stored profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchBody {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_id: Option<String>,
    #[serde(flatten)]
    pub request: SearchRequest,
}

impl SearchBody {
    pub fn text(query: &str) -> Self {
        SearchBody {
            profile_id: None,
            request: SearchRequest::text(query),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSummary {
    pub job_id: String,
    pub title: String,
    pub company: String,
    pub location: Location,
    pub salary_min: Option<f64>,
    pub salary_max: Option<f64>,
    pub seniority: Level,
}

impl From<&JobPosting> for JobSummary {
    fn from(p: &JobPosting) -> Self {
        JobSummary {
            job_id: p.job_id.clone(),
            title: p.title.clone(),
            company: p.company.name.clone(),
            location: p.location.clone(),
            salary_min: p.salary_min,
            salary_max: p.salary_max,
            seniority: p.seniority,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub rank: usize,
    pub job: JobSummary,
    pub match_percentage: u32,
    pub factors: FactorScores,
    pub explanation: Explanation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Weights as supplied, before normalization.
    pub raw_weights: Option<FactorVector>,
    /// Normalized weights the ranking used.
    pub weights: WeightVector,
    pub channel_weights: ChannelWeights,
    pub hits: ChannelHits,
    pub timings: StageTimings,
    pub query: StructuredQuery,
    pub warnings: Vec<String>,
    pub total_results: usize,
    /// True when the factors came from a cached outcome and only the weights changed.
    pub reweighted_from_cache: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub results: Vec<SearchResult>,
    pub diagnostics: Diagnostics,
}

impl SearchResponse {
    /// Copy with stage timings zeroed, for parity comparisons.
    pub fn without_timings(&self) -> SearchResponse {
        let mut r = self.clone();
        r.diagnostics.timings = StageTimings::default();
        r
    }
}

/// Outcomes keyed by every request field except the weights and page size.
#[derive(Debug, Default)]
pub struct SearchCache {
    entries: Mutex<HashMap<String, SearchOutcome>>,
}

impl SearchCache {
    fn key(req: &SearchRequest) -> Option<String> {
        let stripped = SearchRequest {
            weights: None,
            page_size: 0,
            ..req.clone()
        };
        serde_json::to_string(&stripped).ok()
    }

    fn get(&self, key: &str) -> Option<SearchOutcome> {
        self.entries
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(key)
            .cloned()
    }

    fn insert(&self, key: String, outcome: SearchOutcome) {
        let mut entries = self.entries.lock().unwrap_or_else(|e| e.into_inner());
        if entries.len() >= CACHE_CAPACITY {
            entries.clear();
        }
        entries.insert(key, outcome);
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Resolves the profile, validates the request, runs (or re-weights) the
/// pipeline and renders one explanation per returned result.
pub fn run_search(
    bundle: &IndexBundle,
    templates: &Templates,
    store: Option<&ProfileStore>,
    cache: Option<&SearchCache>,
    body: SearchBody,
) -> Result<SearchResponse, ApiError> {
    let mut req = body.request;
    if let Some(id) = body.profile_id {
        let profile = store.and_then(|s| s.get(&id)).ok_or(ApiError::NotFound {
            kind: "profile",
            id,
        })?;
        req.profile = Some(profile);
    }
    if req.page_size == 0 || req.page_size > MAX_PAGE_SIZE {
        return Err(ApiError::validation(
            "page_size",
            format!("must lie in 1..={MAX_PAGE_SIZE}"),
        ));
    }
    if req.channels.count() == 0 {
        return Err(ApiError::validation(
            "channels",
            "enable at least one retrieval channel",
        ));
    }
    let weights = match &req.weights {
        Some(raw) => WeightVector::normalize(*raw)
            .map_err(|e| ApiError::validation("weights", e.to_string()))?,
        None => bundle
            .config()
            .rerank
            .default_weights
            .normalized()
            .map_err(|e| ApiError::Internal(e.to_string()))?,
    };

    let key = cache
        .filter(|_| req.rerank)
        .and_then(|_| SearchCache::key(&req));
    let cached = match (cache, &key) {
        (Some(c), Some(k)) => c.get(k),
        _ => None,
    };
    let reweighted_from_cache = cached.is_some();
    let outcome = match cached {
        Some(mut outcome) => {
            let t = Instant::now();
            outcome.reweight(weights);
            let ms = t.elapsed().as_secs_f64() * 1000.0;
            outcome.timings = StageTimings {
                rerank_ms: ms,
                total_ms: ms,
                ..Default::default()
            };
            outcome
        }
        None => {
            let outcome = search(&req, bundle)?;
            if let (Some(c), Some(k)) = (cache, key) {
                c.insert(k, outcome.clone());
            }
            outcome
        }
    };

    let results = outcome
        .ranking
        .entries
        .iter()
        .zip(&outcome.factors)
        .take(req.page_size)
        .enumerate()
        .map(|(i, (entry, factors))| {
            let job = bundle.job(&entry.job_id).ok_or_else(|| {
                ApiError::Internal(format!("ranked job {} is not indexed", entry.job_id))
            })?;
            let (explanation, _) = explain(factors, &outcome.weights, templates, None);
            Ok(SearchResult {
                rank: i + 1,
                job: JobSummary::from(job),
                match_percentage: explanation.match_percentage,
                factors: factors.clone(),
                explanation,
            })
        })
        .collect::<Result<Vec<_>, ApiError>>()?;

    Ok(SearchResponse {
        results,
        diagnostics: Diagnostics {
            raw_weights: req.weights,
            weights: outcome.weights,
            channel_weights: outcome.channel_weights,
            hits: outcome.hits,
            timings: outcome.timings,
            query: outcome.query,
            warnings: outcome.warnings,
            total_results: outcome.ranking.entries.len(),
            reweighted_from_cache,
        },
    })
}
