//! HTTP routes over a shared, read-only index bundle.

use std::sync::{Arc, OnceLock};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use jobmatch_core::explain::{ExplainThresholds, Templates};
use jobmatch_core::graph::Subgraph;
use jobmatch_core::resume::{parse_resume, ResumeError};
use jobmatch_core::{
    CandidateProfile, EngineConfig, IndexBundle, JobPosting, SkillId, WeightVector,
};
use serde::{Deserialize, Serialize};

use crate::api::{run_search, ApiError, SearchBody, SearchCache, SearchResponse, MAX_PAGE_SIZE};
use crate::store::ProfileStore;

pub const MAX_RADIUS: u8 = 3;

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    bundle: OnceLock<Arc<IndexBundle>>,
    store: ProfileStore,
    templates: Templates,
    cache: SearchCache,
}

impl AppState {
    /// State without a bundle; bundle-backed routes answer 503 until
    /// [`AppState::install_bundle`] is called.
    pub fn new(store: ProfileStore, templates: Templates) -> Self {
        AppState {
            inner: Arc::new(Inner {
                bundle: OnceLock::new(),
                store,
                templates,
                cache: SearchCache::default(),
            }),
        }
    }

    pub fn with_bundle(store: ProfileStore, templates: Templates, bundle: IndexBundle) -> Self {
        let state = AppState::new(store, templates);
        state.install_bundle(bundle);
        state
    }

    /// Freezes `bundle` as the served index. Returns false if one was already installed.
    pub fn install_bundle(&self, bundle: IndexBundle) -> bool {
        self.inner.bundle.set(Arc::new(bundle)).is_ok()
    }

    pub fn bundle(&self) -> Result<Arc<IndexBundle>, ApiError> {
        self.inner.bundle.get().cloned().ok_or(ApiError::NotReady)
    }

    pub fn store(&self) -> &ProfileStore {
        &self.inner.store
    }

    pub fn templates(&self) -> &Templates {
        &self.inner.templates
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/profiles", post(create_profile))
        .route("/profiles/{id}", get(get_profile))
        .route("/search", post(search_jobs))
        .route("/jobs/{id}", get(get_job))
        .route("/graph/neighborhood", get(neighborhood))
        .route("/config", get(config))
        .route("/healthz", get(healthz))
        .with_state(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileResponse {
    pub profile_id: String,
    pub profile: CandidateProfile,
}

#[derive(Debug, Deserialize)]
struct ResumeJson {
    text: String,
}

/// Accepts raw resume text, or a JSON object with a `text` field.
fn resume_text(body: &[u8]) -> Result<String, ApiError> {
    if let Ok(r) = serde_json::from_slice::<ResumeJson>(body) {
        return Ok(r.text);
    }
    String::from_utf8(body.to_vec())
        .map_err(|_| ApiError::validation("body", "resume text must be UTF-8"))
}

async fn create_profile(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let bundle = state.bundle()?;
    let text = resume_text(&body)?;
    let parsed = parse_resume("", &text, bundle.synonyms(), &bundle.config().seniority).map_err(
        |e| match e {
            ResumeError::EmptyInput => ApiError::EmptyInput,
        },
    )?;
    let st = state.clone();
    let profile = tokio::task::spawn_blocking(move || st.store().create(parsed))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok((
        StatusCode::CREATED,
        Json(ProfileResponse {
            profile_id: profile.profile_id.clone(),
            profile,
        }),
    ))
}

async fn get_profile(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<ProfileResponse>, ApiError> {
    let profile = state.store().get(&id).ok_or(ApiError::NotFound {
        kind: "profile",
        id,
    })?;
    Ok(Json(ProfileResponse {
        profile_id: profile.profile_id.clone(),
        profile,
    }))
}

async fn search_jobs(
    State(state): State<AppState>,
    body: Result<Json<SearchBody>, JsonRejection>,
) -> Result<Json<SearchResponse>, ApiError> {
    let Json(body) = body.map_err(|e| ApiError::validation("body", e.body_text()))?;
    let bundle = state.bundle()?;
    let st = state.clone();
    let response = tokio::task::spawn_blocking(move || {
        run_search(
            &bundle,
            st.templates(),
            Some(st.store()),
            Some(&st.inner.cache),
            body,
        )
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(response))
}

async fn get_job(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<JobPosting>, ApiError> {
    let bundle = state.bundle()?;
    bundle
        .job(&id)
        .cloned()
        .map(Json)
        .ok_or(ApiError::NotFound { kind: "job", id })
}

#[derive(Debug, Deserialize)]
pub struct NeighborhoodParams {
    pub skill: Option<String>,
    pub radius: Option<u8>,
}

async fn neighborhood(
    State(state): State<AppState>,
    params: Result<Query<NeighborhoodParams>, axum::extract::rejection::QueryRejection>,
) -> Result<Json<Subgraph>, ApiError> {
    let Query(params) = params.map_err(|e| ApiError::validation("radius", e.body_text()))?;
    let bundle = state.bundle()?;
    let raw = params
        .skill
        .filter(|s| !s.trim().is_empty())
        .ok_or_else(|| ApiError::validation("skill", "a skill is required"))?;
    let radius = params.radius.unwrap_or(1);
    if !(1..=MAX_RADIUS).contains(&radius) {
        return Err(ApiError::validation(
            "radius",
            format!("must lie in 1..={MAX_RADIUS}"),
        ));
    }
    let skill = bundle
        .synonyms()
        .lookup(&raw)
        .cloned()
        .unwrap_or_else(|| SkillId::new(&raw));
    bundle
        .graph()
        .neighborhood(&skill, radius, bundle.config().graph.neighborhood_budget)
        .map(Json)
        .map_err(|_| ApiError::NotFound {
            kind: "skill",
            id: raw,
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageLimits {
    pub default: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigResponse {
    pub corpus_fingerprint: String,
    pub engine: EngineConfig,
    pub default_weights: WeightVector,
    pub explain_thresholds: ExplainThresholds,
    pub page_size: PageLimits,
    pub max_neighborhood_radius: u8,
}

async fn config(State(state): State<AppState>) -> Result<Json<ConfigResponse>, ApiError> {
    let bundle = state.bundle()?;
    let cfg = bundle.config();
    Ok(Json(ConfigResponse {
        corpus_fingerprint: bundle.fingerprint().to_string(),
        engine: cfg.clone(),
        default_weights: cfg
            .rerank
            .default_weights
            .normalized()
            .map_err(|e| ApiError::Internal(e.to_string()))?,
        explain_thresholds: state.templates().thresholds.clone(),
        page_size: PageLimits {
            default: jobmatch_core::SearchRequest::default().page_size,
            max: MAX_PAGE_SIZE,
        },
        max_neighborhood_radius: MAX_RADIUS,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexCounts {
    pub lexical: usize,
    pub vectors: usize,
    pub graph_jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub ready: bool,
    pub documents: usize,
    pub indexes: Option<IndexCounts>,
    pub profiles: usize,
}

/// Liveness: always 200, with `ready` false until the bundle is installed.
async fn healthz(State(state): State<AppState>) -> Json<Health> {
    let bundle = state.bundle().ok();
    Json(Health {
        status: "ok".into(),
        ready: bundle.is_some(),
        documents: bundle.as_ref().map_or(0, |b| b.doc_count()),
        indexes: bundle.as_ref().map(|b| {
            let (lexical, vectors, graph_jobs) = b.index_counts();
            IndexCounts {
                lexical,
                vectors,
                graph_jobs,
            }
        }),
        profiles: state.store().len(),
    })
}
