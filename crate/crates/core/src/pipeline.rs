//! Query pipeline: enrichment, concurrent three-channel retrieval, weighted
//! reciprocal rank fusion, hard-constraint filtering and reranking.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{Entity, IndexBundle};
use crate::graph::ExpandedSkills;
use crate::model::{CandidateProfile, Channel, ConstraintSet, RankedList, SkillId};
use crate::rerank::{
    rank_by_utility, score_job, FactorScores, FactorVector, ScoredJob, Subject, WeightError,
    WeightVector,
};
use crate::text::{match_tokens, tokenize};
use crate::vector::Embedding;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelWeights {
    pub lexical: f64,
    pub semantic: f64,
    pub graph: f64,
}

impl ChannelWeights {
    pub fn sum(&self) -> f64 {
        self.lexical + self.semantic + self.graph
    }

    pub fn get(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Lexical => self.lexical,
            Channel::Semantic => self.semantic,
            Channel::Graph => self.graph,
            _ => 0.0,
        }
    }

    /// Zeroes inactive channels and rescales the rest to sum to one.
    pub fn restricted_to(&self, active: ChannelSet) -> ChannelWeights {
        let w = ChannelWeights {
            lexical: if active.lexical { self.lexical } else { 0.0 },
            semantic: if active.semantic { self.semantic } else { 0.0 },
            graph: if active.graph { self.graph } else { 0.0 },
        };
        let total = w.sum();
        if total <= 0.0 {
            let n = active.count().max(1) as f64;
            let share = |on: bool| if on { 1.0 / n } else { 0.0 };
            return ChannelWeights {
                lexical: share(active.lexical),
                semantic: share(active.semantic),
                graph: share(active.graph),
            };
        }
        ChannelWeights {
            lexical: w.lexical / total,
            semantic: w.semantic / total,
            graph: w.graph / total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionConfigError {
    #[error("{0} channel weights must be non-negative and sum to 1 (got {1})")]
    Weights(&'static str, f64),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub rrf_k: u32,
    pub k_lexical: usize,
    pub k_semantic: usize,
    pub k_graph: usize,
    pub union_cap: usize,
    /// Keyword queries with at most this many raw tokens use `short_weights`.
    pub short_query_max_tokens: usize,
    pub short_weights: ChannelWeights,
    pub long_weights: ChannelWeights,
    /// Restrict the lexical channel to jobs matching locations or companies
    /// recognized in the query.
    pub entity_filters: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            rrf_k: 60,
            k_lexical: 150,
            k_semantic: 150,
            k_graph: 75,
            union_cap: 400,
            short_query_max_tokens: 2,
            short_weights: ChannelWeights {
                lexical: 0.2,
                semantic: 0.1,
                graph: 0.7,
            },
            long_weights: ChannelWeights {
                lexical: 0.6,
                semantic: 0.25,
                graph: 0.15,
            },
            entity_filters: true,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FusionConfigError> {
        for (name, w) in [("short", &self.short_weights), ("long", &self.long_weights)] {
            let ok = [w.lexical, w.semantic, w.graph]
                .iter()
                .all(|x| x.is_finite() && *x >= 0.0);
            if !ok || (w.sum() - 1.0).abs() > 1e-9 {
                return Err(FusionConfigError::Weights(name, w.sum()));
            }
        }
        for (name, v) in [
            ("rrf_k", self.rrf_k as usize),
            ("k_lexical", self.k_lexical),
            ("k_semantic", self.k_semantic),
            ("k_graph", self.k_graph),
            ("union_cap", self.union_cap),
        ] {
            if v == 0 {
                return Err(FusionConfigError::NonPositive(name));
            }
        }
        Ok(())
    }
}

/// Which retrieval channels run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub lexical: bool,
    pub semantic: bool,
    pub graph: bool,
}

impl Default for ChannelSet {
    fn default() -> Self {
        ChannelSet::ALL
    }
}

impl ChannelSet {
    pub const ALL: ChannelSet = ChannelSet {
        lexical: true,
        semantic: true,
        graph: true,
    };

    pub fn count(&self) -> usize {
        [self.lexical, self.semantic, self.graph]
            .iter()
            .filter(|b| **b)
            .count()
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.lexical {
            parts.push("BM25");
        }
        if self.semantic {
            parts.push("Sem");
        }
        if self.graph {
            parts.push("KG");
        }
        parts.join("+")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryMode {
    Keyword,
    Resume,
}

/// Enriched query `<E, S, S+, e_q, K>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredQuery {
    pub mode: QueryMode,
    pub text: String,
    pub entities: Vec<Entity>,
    pub skills: BTreeSet<SkillId>,
    /// Skill mentions as typed, used as lexical terms.
    pub skill_surfaces: Vec<String>,
    pub expanded: ExpandedSkills,
    #[serde(skip)]
    pub embedding: Option<Embedding>,
    pub keywords: Vec<String>,
    pub token_count: usize,
}

impl StructuredQuery {
    /// Lexical terms: residual keywords plus the tokens of each skill mention.
    pub fn lexical_terms(&self) -> Vec<String> {
        let mut terms = self.keywords.clone();
        for s in &self.skill_surfaces {
            terms.extend(tokenize(s));
        }
        terms
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("query is empty")]
    EmptyQuery,
    #[error(transparent)]
    Weights(#[from] WeightError),
}

/// Keyword-mode enrichment of free text.
pub fn enrich_text(
    text: &str,
    bundle: &IndexBundle,
) -> Result<(StructuredQuery, Vec<String>), PipelineError> {
    let tokens = match_tokens(text);
    if tokens.is_empty() {
        return Err(PipelineError::EmptyQuery);
    }
    let mut consumed = vec![false; tokens.len()];
    let mut skills = BTreeSet::new();
    let mut skill_surfaces = Vec::new();
    for m in bundle.synonyms().mentions_in_tokens(&tokens) {
        consumed[m.start..m.end].iter_mut().for_each(|c| *c = true);
        skills.insert(m.skill);
        skill_surfaces.push(m.surface);
    }
    let mut entities = Vec::new();
    let free: Vec<String> = tokens
        .iter()
        .zip(&consumed)
        .map(|(t, &c)| if c { String::new() } else { t.clone() })
        .collect();
    for m in bundle.entity_matcher().find_all(&free) {
        consumed[m.start..m.end].iter_mut().for_each(|c| *c = true);
        entities.push(m.value);
    }
    let keywords: Vec<String> = tokens
        .iter()
        .zip(&consumed)
        .filter(|(_, &c)| !c)
        .flat_map(|(t, _)| tokenize(t))
        .collect();
    let mut warnings = Vec::new();
    let embedding = match bundle.embedder().embed(text) {
        Ok(e) => Some(e),
        Err(e) => {
            warnings.push(format!("semantic channel disabled: {e}"));
            None
        }
    };
    let expanded = bundle
        .graph()
        .expand_skills(&skills, bundle.config().graph.expansion_depth);
    Ok((
        StructuredQuery {
            mode: QueryMode::Keyword,
            text: text.to_string(),
            entities,
            skills,
            skill_surfaces,
            expanded,
            embedding,
            keywords,
            token_count: tokenize(text).len().max(1),
        },
        warnings,
    ))
}

/// Text embedded for a profile: skill names, then the headline.
pub fn profile_text(profile: &CandidateProfile, bundle: &IndexBundle) -> String {
    let names: Vec<&str> = profile
        .skills
        .iter()
        .map(|s| bundle.synonyms().display_name(s))
        .collect();
    format!(
        "{}\n{}",
        names.join(", "),
        profile.headline.as_deref().unwrap_or("")
    )
}

/// Resume-mode enrichment from a parsed profile.
pub fn enrich_profile(
    profile: &CandidateProfile,
    bundle: &IndexBundle,
) -> Result<(StructuredQuery, Vec<String>), PipelineError> {
    let headline = profile.headline.clone().unwrap_or_default();
    if profile.skills.is_empty() && tokenize(&headline).is_empty() {
        return Err(PipelineError::EmptyQuery);
    }
    let text = profile_text(profile, bundle);
    let mut warnings = Vec::new();
    let embedding = match bundle.embedder().embed(&text) {
        Ok(e) => Some(e),
        Err(e) => {
            warnings.push(format!("semantic channel disabled: {e}"));
            None
        }
    };
    let skill_surfaces = profile
        .skills
        .iter()
        .map(|s| bundle.synonyms().display_name(s).to_string())
        .collect();
    let entities = profile
        .preferred_locations
        .iter()
        .cloned()
        .map(Entity::Location)
        .collect();
    Ok((
        StructuredQuery {
            mode: QueryMode::Resume,
            text,
            entities,
            expanded: bundle
                .graph()
                .expand_skills(&profile.skills, bundle.config().graph.expansion_depth),
            skills: profile.skills.clone(),
            skill_surfaces,
            embedding,
            keywords: tokenize(&headline),
            token_count: 0,
        },
        warnings,
    ))
}

/// Short keyword queries lean on the graph; long and resume queries on text.
pub fn adaptive_weights(sq: &StructuredQuery, cfg: &FusionConfig) -> ChannelWeights {
    match sq.mode {
        QueryMode::Keyword if sq.token_count <= cfg.short_query_max_tokens => cfg.short_weights,
        _ => cfg.long_weights,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelLists {
    pub lexical: RankedList,
    pub semantic: RankedList,
    pub graph: RankedList,
}

fn lexical_filter<'a>(
    sq: &StructuredQuery,
    bundle: &'a IndexBundle,
) -> Option<impl Fn(u32) -> bool + 'a> {
    if sq.mode != QueryMode::Keyword || !bundle.config().fusion.entity_filters {
        return None;
    }
    let locations: Vec<_> = sq
        .entities
        .iter()
        .filter_map(|e| match e {
            Entity::Location(l) => Some(l.clone()),
            _ => None,
        })
        .collect();
    let companies: Vec<String> = sq
        .entities
        .iter()
        .filter_map(|e| match e {
            Entity::Company(c) => Some(c.to_lowercase()),
            _ => None,
        })
        .collect();
    if locations.is_empty() && companies.is_empty() {
        return None;
    }
    Some(move |doc: u32| {
        let job = &bundle.postings()[doc as usize];
        let loc_ok = locations.is_empty()
            || job.location.remote_allowed
            || locations.iter().any(|l| l.same_city(&job.location));
        let company_ok =
            companies.is_empty() || companies.contains(&job.company.name.to_lowercase());
        loc_ok && company_ok
    })
}

/// Runs the active channels concurrently against the frozen bundle.
pub fn retrieve_all(
    sq: &StructuredQuery,
    bundle: &IndexBundle,
    active: ChannelSet,
) -> (ChannelLists, Vec<String>) {
    let cfg = &bundle.config().fusion;
    let lexical = || {
        if !active.lexical {
            return RankedList::empty(Channel::Lexical, cfg.k_lexical);
        }
        let filter = lexical_filter(sq, bundle);
        let allow = filter.as_ref().map(|f| f as &dyn Fn(u32) -> bool);
        bundle.lexical().search(
            &sq.lexical_terms(),
            allow,
            cfg.k_lexical,
            &bundle.config().bm25,
        )
    };
    let semantic = || match (&sq.embedding, active.semantic) {
        (Some(e), true) => bundle.vectors().knn_search(e, cfg.k_semantic),
        _ => RankedList::empty(Channel::Semantic, cfg.k_semantic),
    };
    let graph = || {
        if !active.graph {
            return RankedList::empty(Channel::Graph, cfg.k_graph);
        }
        bundle
            .graph()
            .graph_search(&sq.expanded, cfg.k_graph, &bundle.config().graph)
    };
    let mut warnings = Vec::new();
    let (lexical, semantic, graph) = std::thread::scope(|s| {
        let l = s.spawn(lexical);
        let v = s.spawn(semantic);
        let g = graph();
        let mut join = |h: std::thread::ScopedJoinHandle<'_, RankedList>, ch: Channel, k: usize| {
            h.join().unwrap_or_else(|_| {
                warnings.push(format!("{ch:?} channel failed; returning no hits"));
                RankedList::empty(ch, k)
            })
        };
        let l = join(l, Channel::Lexical, cfg.k_lexical);
        let v = join(v, Channel::Semantic, cfg.k_semantic);
        (l, v, g)
    });
    (
        ChannelLists {
            lexical,
            semantic,
            graph,
        },
        warnings,
    )
}

/// Weighted RRF: `score(d) = Σ_r w_r / (k + rank_r(d))`, capped at `cap`.
pub fn fuse_rrf(lists: &[(&RankedList, f64)], rrf_k: u32, cap: usize) -> RankedList {
    let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
    for (list, w) in lists {
        if *w <= 0.0 {
            continue;
        }
        for (i, e) in list.entries.iter().enumerate() {
            *scores.entry(e.job_id.as_str()).or_default() += w / (rrf_k as f64 + (i + 1) as f64);
        }
    }
    RankedList::from_scores(Channel::Fused, scores, cap.max(1))
}

/// Drops jobs the candidate is ineligible for; survivors keep their order.
pub fn apply_hard_constraints(
    list: &RankedList,
    c: &ConstraintSet,
    bundle: &IndexBundle,
) -> RankedList {
    if c.is_empty() {
        return list.clone();
    }
    list.retain(|e| bundle.job(&e.job_id).is_some_and(|j| c.admits(j)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRequest {
    #[serde(default)]
    pub query: Option<String>,
    #[serde(default)]
    pub profile: Option<CandidateProfile>,
    /// Raw weights; normalized before use. Missing keys count as zero.
    #[serde(default)]
    pub weights: Option<FactorVector>,
    /// Overrides the profile's hard constraints.
    #[serde(default)]
    pub constraints: Option<ConstraintSet>,
    #[serde(default = "default_page_size")]
    pub page_size: usize,
    #[serde(default)]
    pub channels: ChannelSet,
    #[serde(default = "default_true")]
    pub rerank: bool,
}

fn default_page_size() -> usize {
    10
}

fn default_true() -> bool {
    true
}

impl Default for SearchRequest {
    fn default() -> Self {
        SearchRequest {
            query: None,
            profile: None,
            weights: None,
            constraints: None,
            page_size: default_page_size(),
            channels: ChannelSet::ALL,
            rerank: true,
        }
    }
}

impl SearchRequest {
    pub fn text(query: &str) -> Self {
        SearchRequest {
            query: Some(query.to_string()),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub enrich_ms: f64,
    pub retrieve_ms: f64,
    pub fuse_ms: f64,
    pub filter_ms: f64,
    pub rerank_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelHits {
    pub lexical: usize,
    pub semantic: usize,
    pub graph: usize,
    pub fused: usize,
    pub filtered: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub query: StructuredQuery,
    pub channel_weights: ChannelWeights,
    pub weights: WeightVector,
    pub lists: ChannelLists,
    /// Fused list before hard-constraint filtering.
    pub fused: RankedList,
    /// Final order: reranked if requested, else the filtered fused order.
    pub ranking: RankedList,
    /// Factor rows aligned with `ranking`.
    pub factors: Vec<FactorScores>,
    /// Weight-independent factor cache for cheap re-weighting.
    pub scored: Vec<ScoredJob>,
    pub hits: ChannelHits,
    pub timings: StageTimings,
    pub warnings: Vec<String>,
}

impl SearchOutcome {
    /// Re-evaluates the utility with new weights using the cached factors.
    pub fn reweight(&mut self, weights: WeightVector) {
        let (ranking, factors) = rank_by_utility(&self.scored, &weights);
        self.ranking = ranking;
        self.factors = factors;
        self.weights = weights;
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

/// Runs the whole pipeline for one request.
pub fn search(req: &SearchRequest, bundle: &IndexBundle) -> Result<SearchOutcome, PipelineError> {
    let start = Instant::now();
    let cfg = bundle.config();
    let weights = match &req.weights {
        Some(raw) => WeightVector::normalize(*raw)?,
        None => cfg.rerank.default_weights.normalized()?,
    };

    let t = Instant::now();
    let query_text = req.query.as_deref().filter(|q| !q.trim().is_empty());
    let (sq, mut warnings) = match (query_text, &req.profile) {
        (Some(q), _) => enrich_text(q, bundle)?,
        (None, Some(p)) => enrich_profile(p, bundle)?,
        (None, None) => return Err(PipelineError::EmptyQuery),
    };
    let profile_embedding = req.profile.as_ref().and_then(|p| match sq.mode {
        QueryMode::Resume => sq.embedding.clone(),
        QueryMode::Keyword => bundle.embedder().embed(&profile_text(p, bundle)).ok(),
    });
    let enrich_ms = ms(t);

    let t = Instant::now();
    let (lists, channel_warnings) = retrieve_all(&sq, bundle, req.channels);
    warnings.extend(channel_warnings);
    let retrieve_ms = ms(t);

    let t = Instant::now();
    let channel_weights = adaptive_weights(&sq, &cfg.fusion).restricted_to(req.channels);
    let fused = fuse_rrf(
        &[
            (&lists.lexical, channel_weights.lexical),
            (&lists.semantic, channel_weights.semantic),
            (&lists.graph, channel_weights.graph),
        ],
        cfg.fusion.rrf_k,
        cfg.fusion.union_cap,
    );
    let fuse_ms = ms(t);

    let t = Instant::now();
    let constraints = req
        .constraints
        .clone()
        .or_else(|| req.profile.as_ref().map(|p| p.hard_constraints.clone()))
        .unwrap_or_default();
    let filtered = apply_hard_constraints(&fused, &constraints, bundle);
    let filter_ms = ms(t);

    let t = Instant::now();
    let subject = match (&req.profile, &profile_embedding) {
        (Some(p), Some(e)) => Subject::Profile {
            profile: p,
            embedding: e.as_slice(),
        },
        _ => Subject::Query {
            skills: &sq.skills,
            embedding: sq.embedding.as_ref().map(Embedding::as_slice),
        },
    };
    let scored: Vec<ScoredJob> = filtered
        .entries
        .iter()
        .filter_map(|e| {
            let job = bundle.job(&e.job_id)?;
            let emb = bundle.job_embedding(&e.job_id)?;
            Some(score_job(subject, job, emb, bundle.graph(), &cfg.rerank))
        })
        .collect();
    let (ranking, factors) = if req.rerank {
        rank_by_utility(&scored, &weights)
    } else {
        let by_id: BTreeMap<&str, &ScoredJob> =
            scored.iter().map(|s| (s.job_id.as_str(), s)).collect();
        let factors = filtered
            .ids()
            .filter_map(|id| by_id.get(id).map(|s| s.with_weights(&weights)))
            .collect();
        (filtered.clone(), factors)
    };
    let rerank_ms = ms(t);

    let hits = ChannelHits {
        lexical: lists.lexical.len(),
        semantic: lists.semantic.len(),
        graph: lists.graph.len(),
        fused: fused.len(),
        filtered: filtered.len(),
    };
    Ok(SearchOutcome {
        query: sq,
        channel_weights,
        weights,
        lists,
        fused,
        ranking,
        factors,
        scored,
        hits,
        timings: StageTimings {
            enrich_ms,
            retrieve_ms,
            fuse_ms,
            filter_ms,
            rerank_ms,
            total_ms: ms(start),
        },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::build_indexes;
    use crate::config::EngineConfig;
    use crate::model::{Degree, JobPosting, Level, Location};
    use crate::skills::SkillSynonymTable;

    fn list(channel: Channel, ids: &[&str]) -> RankedList {
        let n = ids.len();
        RankedList::from_scores(
            channel,
            ids.iter().enumerate().map(|(i, id)| (*id, (n - i) as f64)),
            n.max(1),
        )
    }

    #[test]
    fn rrf_hand_values() {
        let single = list(Channel::Lexical, &["d"]);
        let fused = fuse_rrf(&[(&single, 1.0)], 60, 400);
        assert!((fused.entries[0].score - 1.0 / 61.0).abs() < 1e-15);
        assert!((fused.entries[0].score - 0.016393).abs() < 1e-6);

        let lex = list(Channel::Lexical, &["d", "x"]);
        let graph = list(Channel::Graph, &["y", "z", "d"]);
        let fused = fuse_rrf(&[(&lex, 0.6), (&graph, 0.15)], 60, 400);
        let d = fused.entries.iter().find(|e| e.job_id == "d").unwrap();
        assert!((d.score - (0.6 / 61.0 + 0.15 / 63.0)).abs() < 1e-15);
        assert!((d.score - 0.0122171).abs() < 1e-7);
        assert!(fused.rank_of("absent").is_none());
    }

    #[test]
    fn rrf_respects_cap() {
        let ids: Vec<String> = (0..500).map(|i| format!("j{i:03}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let big = list(Channel::Lexical, &refs);
        assert_eq!(fuse_rrf(&[(&big, 1.0)], 60, 400).len(), 400);
    }

    #[test]
    fn restricted_weights_renormalize() {
        let w = FusionConfig::default().long_weights;
        let only_lex = w.restricted_to(ChannelSet {
            lexical: true,
            semantic: false,
            graph: false,
        });
        assert_eq!(
            (only_lex.lexical, only_lex.semantic, only_lex.graph),
            (1.0, 0.0, 0.0)
        );
        let full = w.restricted_to(ChannelSet::ALL);
        assert!((full.sum() - 1.0).abs() < 1e-12);
    }

    fn table() -> SkillSynonymTable {
        SkillSynonymTable::from_rows([
            ("python", "python"),
            ("machine learning", "machine-learning"),
            ("ml", "machine-learning"),
            ("go", "go"),
            ("golang", "go"),
            ("microservices", "microservices"),
            ("kubernetes", "kubernetes"),
            ("k8s", "kubernetes"),
            ("container orchestration", "container-orchestration"),
            ("sql", "sql"),
        ])
        .unwrap()
    }

    fn job(id: &str, title: &str, skills: &[&str], city: &str) -> JobPosting {
        JobPosting {
            job_id: id.into(),
            title: title.into(),
            description: format!("{title} role"),
            required_skills: skills.iter().map(|s| SkillId::new(*s)).collect(),
            location: Location::new(city, "NY"),
            seniority: Level::Mid,
            ..Default::default()
        }
    }

    fn bundle(jobs: Vec<JobPosting>) -> IndexBundle {
        let rel = vec![
            (SkillId::new("go"), SkillId::new("microservices")),
            (
                SkillId::new("kubernetes"),
                SkillId::new("container-orchestration"),
            ),
        ];
        build_indexes(jobs, table(), rel, EngineConfig::default()).unwrap()
    }

    #[test]
    fn enrich_examples() {
        let b = bundle(vec![job("a", "Data Scientist", &["python"], "Brooklyn")]);
        let (sq, _) = enrich_text("Python developer machine learning", &b).unwrap();
        assert!(sq.skills.contains(&SkillId::new("python")));
        assert!(sq.skills.contains(&SkillId::new("machine-learning")));
        assert!(sq.skills.iter().all(|s| sq.expanded.contains_key(s)));
        assert_eq!(sq.keywords, ["developer"]);

        let (sq, _) = enrich_text("junior backend engineer Go", &b).unwrap();
        assert!(sq.expanded.contains_key(&SkillId::new("microservices")));

        let (sq, _) = enrich_text("pastry chef in brooklyn", &b).unwrap();
        assert!(sq.skills.is_empty() && sq.expanded.is_empty());
        assert_eq!(sq.keywords, ["pastry", "chef", "in"]);
        assert!(matches!(sq.entities[0], Entity::Location(_)));

        assert_eq!(
            enrich_text("  ", &b).unwrap_err(),
            PipelineError::EmptyQuery
        );
    }

    #[test]
    fn adaptive_regimes() {
        let b = bundle(vec![]);
        let cfg = FusionConfig::default();
        let (short, _) = enrich_text("ML", &b).unwrap();
        assert_eq!(adaptive_weights(&short, &cfg).graph, 0.7);
        let (long, _) = enrich_text("senior backend engineer golang remote", &b).unwrap();
        assert_eq!(adaptive_weights(&long, &cfg).lexical, 0.6);
        let profile = CandidateProfile {
            profile_id: "p".into(),
            skills: [SkillId::new("python")].into(),
            ..Default::default()
        };
        let (resume, _) = enrich_profile(&profile, &b).unwrap();
        assert_eq!(adaptive_weights(&resume, &cfg).lexical, 0.6);
    }

    #[test]
    fn empty_corpus_gives_empty_lists() {
        let b = bundle(vec![]);
        let (sq, _) = enrich_text("python", &b).unwrap();
        let (lists, _) = retrieve_all(&sq, &b, ChannelSet::ALL);
        assert!(lists.lexical.is_empty() && lists.semantic.is_empty() && lists.graph.is_empty());
        let out = search(&SearchRequest::text("python"), &b).unwrap();
        assert!(out.ranking.is_empty());
    }

    #[test]
    fn each_channel_contributes_a_unique_document() {
        let jobs = vec![
            // Lexical only: title word, no skills, description far from the query.
            job("lex", "Zephyrology Liaison", &[], "Queens"),
            // Graph only: requires a skill one hop from the query skill.
            job(
                "kg",
                "Platform Role",
                &["container-orchestration"],
                "Queens",
            ),
            job("other", "Cook", &["sql"], "Queens"),
        ];
        let b = bundle(jobs);
        let (sq, _) = enrich_text("zephyrology k8s", &b).unwrap();
        let (lists, _) = retrieve_all(&sq, &b, ChannelSet::ALL);
        assert!(lists.lexical.rank_of("lex").is_some());
        assert!(lists.lexical.rank_of("kg").is_none());
        assert!(lists.graph.rank_of("kg").is_some());
        assert!(lists.graph.rank_of("lex").is_none());
        assert_eq!(lists.semantic.len(), 3);
        let out = search(&SearchRequest::text("zephyrology k8s"), &b).unwrap();
        assert!(out.fused.rank_of("lex").is_some() && out.fused.rank_of("kg").is_some());
    }

    #[test]
    fn hard_constraints_filter() {
        let mut a = job("a", "Engineer", &["python"], "Queens");
        a.visa_sponsorship = false;
        let mut c = job("c", "Engineer", &["python"], "Queens");
        c.visa_sponsorship = true;
        c.certifications_required = ["PE".to_string()].into();
        let mut d = job("d", "Engineer", &["python"], "Queens");
        d.visa_sponsorship = true;
        d.degree_required = Degree::Master;
        let b = bundle(vec![a, c, d]);
        let fused = list(Channel::Fused, &["a", "c", "d"]);
        assert_eq!(
            apply_hard_constraints(&fused, &ConstraintSet::default(), &b),
            fused
        );
        let cs = ConstraintSet {
            needs_visa_sponsorship: true,
            min_degree: Some(Degree::Master),
            required_certifications: Some(BTreeSet::new()),
        };
        assert_eq!(
            apply_hard_constraints(&fused, &cs, &b)
                .ids()
                .collect::<Vec<_>>(),
            ["d"]
        );
    }

    #[test]
    fn resume_mode_ranks_full_match_first() {
        let mut best = job("best", "Python Engineer", &["python", "sql"], "Brooklyn");
        best.seniority = Level::Senior;
        let mut other = job("other", "Python Engineer", &["python"], "Albany");
        other.seniority = Level::Junior;
        let b = bundle(vec![
            best,
            other,
            job("x", "SQL Analyst", &["sql"], "Buffalo"),
        ]);
        let profile = CandidateProfile {
            profile_id: "p".into(),
            headline: Some("Python Engineer".into()),
            skills: [SkillId::new("python"), SkillId::new("sql")].into(),
            experience_level: Level::Senior,
            preferred_locations: vec![Location::new("Brooklyn", "NY")],
            ..Default::default()
        };
        let req = SearchRequest {
            profile: Some(profile),
            ..Default::default()
        };
        let out = search(&req, &b).unwrap();
        assert_eq!(out.ranking.entries[0].job_id, "best");
        assert_eq!(search(&req, &b).unwrap().ranking, out.ranking);
    }

    #[test]
    fn unmatched_keyword_query_is_empty_not_error() {
        let b = bundle(vec![job("a", "Engineer", &["python"], "Queens")]);
        let req = SearchRequest {
            query: Some("qqqq".into()),
            channels: ChannelSet {
                lexical: true,
                semantic: false,
                graph: true,
            },
            ..Default::default()
        };
        assert!(search(&req, &b).unwrap().ranking.is_empty());
    }

    #[test]
    fn reweight_matches_fresh_search() {
        let b = bundle(vec![
            job("a", "Python Engineer", &["python"], "Queens"),
            job("b", "Python SQL Engineer", &["python", "sql"], "Queens"),
        ]);
        let mut out = search(&SearchRequest::text("python sql engineer"), &b).unwrap();
        let raw = FactorVector {
            semantic: 1.0,
            ..Default::default()
        };
        out.reweight(WeightVector::normalize(raw).unwrap());
        let fresh = search(
            &SearchRequest {
                weights: Some(raw),
                ..SearchRequest::text("python sql engineer")
            },
            &b,
        )
        .unwrap();
        assert_eq!(out.ranking, fresh.ranking);
    }
}
