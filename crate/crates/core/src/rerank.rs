//! Six-factor white-box utility reranker.
//!
//! Each factor maps a (candidate, job) pair into `[0, 1]` and records the
//! evidence it used. The utility is the weighted sum `U = Σ w_f · φ_f` with a
//! renormalized weight vector. Factor values are computed once per request
//! ([`score_factors`]); changing weights only re-evaluates the sum
//! ([`rank_by_utility`]).

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{KnowledgeGraph, SkillPath};
use crate::model::{CandidateProfile, Channel, JobPosting, Level, RankedList, SkillId};
use crate::vector::dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    Skill,
    Experience,
    Location,
    Salary,
    Semantic,
    Company,
}

impl Factor {
    /// Canonical order; also the tie-break order for the top factor.
    pub const ALL: [Factor; 6] = [
        Factor::Skill,
        Factor::Experience,
        Factor::Location,
        Factor::Salary,
        Factor::Semantic,
        Factor::Company,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Factor::Skill => "skill",
            Factor::Experience => "experience",
            Factor::Location => "location",
            Factor::Salary => "salary",
            Factor::Semantic => "semantic",
            Factor::Company => "company",
        }
    }

    pub fn parse(name: &str) -> Option<Factor> {
        Factor::ALL.into_iter().find(|f| f.as_str() == name.trim())
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Six reals keyed by factor, serialized as a named object.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorVector {
    pub skill: f64,
    pub experience: f64,
    pub location: f64,
    pub salary: f64,
    pub semantic: f64,
    pub company: f64,
}

impl FactorVector {
    pub fn from_array(a: [f64; 6]) -> Self {
        FactorVector {
            skill: a[0],
            experience: a[1],
            location: a[2],
            salary: a[3],
            semantic: a[4],
            company: a[5],
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [
            self.skill,
            self.experience,
            self.location,
            self.salary,
            self.semantic,
            self.company,
        ]
    }

    pub fn get(&self, f: Factor) -> f64 {
        self.to_array()[f.index()]
    }

    pub fn set(&mut self, f: Factor, v: f64) {
        let mut a = self.to_array();
        a[f.index()] = v;
        *self = FactorVector::from_array(a);
    }

    pub fn uniform(v: f64) -> Self {
        FactorVector::from_array([v; 6])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightError {
    #[error("weight for {0} is negative or not finite")]
    Invalid(Factor),
    #[error("weights sum to zero")]
    AllZero,
}

/// Reranking weights, normalized to sum to one. Deserializing a raw vector
/// normalizes it; absent keys count as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FactorVector", into = "FactorVector")]
pub struct WeightVector(FactorVector);

impl TryFrom<FactorVector> for WeightVector {
    type Error = WeightError;

    fn try_from(raw: FactorVector) -> Result<Self, Self::Error> {
        WeightVector::normalize(raw)
    }
}

impl From<WeightVector> for FactorVector {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

impl Default for WeightVector {
    fn default() -> Self {
        WeightVector::normalize(default_raw_weights()).expect("default weights are valid")
    }
}

pub fn default_raw_weights() -> FactorVector {
    FactorVector::from_array([0.35, 0.25, 0.15, 0.10, 0.10, 0.05])
}

impl WeightVector {
    pub fn normalize(raw: FactorVector) -> Result<Self, WeightError> {
        let a = raw.to_array();
        for f in Factor::ALL {
            let w = a[f.index()];
            if !(w.is_finite() && w >= 0.0) {
                return Err(WeightError::Invalid(f));
            }
        }
        let total: f64 = a.iter().sum();
        if total <= 0.0 {
            return Err(WeightError::AllZero);
        }
        Ok(WeightVector(FactorVector::from_array(a.map(|w| w / total))))
    }

    pub fn get(&self, f: Factor) -> f64 {
        self.0.get(f)
    }

    pub fn as_vector(&self) -> FactorVector {
        self.0
    }
}

/// Raw default weights as written in config; normalized on use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RawWeights(pub FactorVector);

impl Default for RawWeights {
    fn default() -> Self {
        RawWeights(default_raw_weights())
    }
}

impl RawWeights {
    pub fn normalized(&self) -> Result<WeightVector, WeightError> {
        WeightVector::normalize(self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkillFactorConfig {
    /// Value when both the candidate and the job list no skills.
    pub both_empty: f64,
    /// Bonus credit for an unmatched job skill reached in 1, 2, ... hops.
    pub bonus_hop_weights: Vec<f64>,
}

impl Default for SkillFactorConfig {
    fn default() -> Self {
        SkillFactorConfig {
            both_empty: 1.0,
            bonus_hop_weights: vec![0.5, 0.25],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocationFactorConfig {
    pub exact: f64,
    pub remote: f64,
    pub state: f64,
    pub none: f64,
    pub missing: f64,
}

impl Default for LocationFactorConfig {
    fn default() -> Self {
        LocationFactorConfig {
            exact: 1.0,
            remote: 0.9,
            state: 0.6,
            none: 0.0,
            missing: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompanyFactorConfig {
    pub industry_weight: f64,
    pub size_weight: f64,
}

impl Default for CompanyFactorConfig {
    fn default() -> Self {
        CompanyFactorConfig {
            industry_weight: 0.7,
            size_weight: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RerankConfig {
    pub default_weights: RawWeights,
    /// Value for any factor that cannot be computed from the inputs.
    pub neutral: f64,
    /// Level distance that maps to zero experience fit.
    pub experience_max_distance: f64,
    pub skill: SkillFactorConfig,
    pub location: LocationFactorConfig,
    pub company: CompanyFactorConfig,
}

impl Default for RerankConfig {
    fn default() -> Self {
        RerankConfig {
            default_weights: RawWeights::default(),
            neutral: 0.5,
            experience_max_distance: 2.0,
            skill: SkillFactorConfig::default(),
            location: LocationFactorConfig::default(),
            company: CompanyFactorConfig::default(),
        }
    }
}

impl RerankConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.neutral) {
            return Err("rerank.neutral");
        }
        if self.experience_max_distance.is_nan() || self.experience_max_distance <= 0.0 {
            return Err("rerank.experience_max_distance");
        }
        if !unit(self.skill.both_empty) || !self.skill.bonus_hop_weights.iter().all(|&w| unit(w)) {
            return Err("rerank.skill");
        }
        let l = &self.location;
        if ![l.exact, l.remote, l.state, l.none, l.missing]
            .into_iter()
            .all(unit)
        {
            return Err("rerank.location");
        }
        let c = &self.company;
        if c.industry_weight < 0.0
            || c.size_weight < 0.0
            || (c.industry_weight + c.size_weight - 1.0).abs() > 1e-9
        {
            return Err("rerank.company");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillBonus {
    pub job_skill: SkillId,
    pub path: SkillPath,
    pub credit: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SkillEvidence {
    pub matched: Vec<SkillId>,
    pub bonus: Vec<SkillBonus>,
    /// Required job skills neither matched nor reachable.
    pub missing: Vec<SkillId>,
    pub required_count: usize,
    pub candidate_count: usize,
    pub jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceEvidence {
    pub candidate: Level,
    pub job: Level,
    pub distance: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocationTier {
    Exact,
    Remote,
    State,
    None,
    Missing,
}

impl LocationTier {
    pub fn as_str(self) -> &'static str {
        match self {
            LocationTier::Exact => "exact",
            LocationTier::Remote => "remote",
            LocationTier::State => "state",
            LocationTier::None => "none",
            LocationTier::Missing => "missing",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationEvidence {
    pub tier: LocationTier,
    pub job_location: Option<String>,
    pub matched_preference: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalaryEvidence {
    pub expectation: Option<f64>,
    pub midpoint: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticEvidence {
    pub cosine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanyEvidence {
    pub industry: Option<String>,
    pub size: Option<String>,
    /// `None` when the candidate declared no preference of that kind.
    pub industry_match: Option<bool>,
    pub size_match: Option<bool>,
}

/// Per-factor support. `None` marks a factor held at the neutral value
/// because its inputs were unavailable (no profile).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorEvidence {
    pub skill: SkillEvidence,
    pub experience: Option<ExperienceEvidence>,
    pub location: Option<LocationEvidence>,
    pub salary: Option<SalaryEvidence>,
    pub semantic: SemanticEvidence,
    pub company: Option<CompanyEvidence>,
}

/// Factor values, utility and evidence for one job under one weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorScores {
    pub phi: FactorVector,
    pub utility: f64,
    pub weights: WeightVector,
    pub evidence: FactorEvidence,
}

impl FactorScores {
    pub fn contribution(&self, f: Factor) -> f64 {
        self.weights.get(f) * self.phi.get(f)
    }

    /// `round(100 · U)`.
    pub fn match_percentage(&self) -> u32 {
        match_percentage(self.utility)
    }
}

pub fn match_percentage(utility: f64) -> u32 {
    (100.0 * utility).round().clamp(0.0, 100.0) as u32
}

/// Who the jobs are scored against.
#[derive(Debug, Clone, Copy)]
pub enum Subject<'a> {
    Profile {
        profile: &'a CandidateProfile,
        embedding: &'a [f64],
    },
    /// Query-only context: skill factor against the query skills, semantic
    /// against the query embedding (if any), everything else neutral.
    Query {
        skills: &'a BTreeSet<SkillId>,
        embedding: Option<&'a [f64]>,
    },
}

pub fn factor_skill(
    candidate: &BTreeSet<SkillId>,
    required: &BTreeSet<SkillId>,
    graph: &KnowledgeGraph,
    cfg: &SkillFactorConfig,
) -> (f64, SkillEvidence) {
    let mut ev = SkillEvidence {
        required_count: required.len(),
        candidate_count: candidate.len(),
        ..Default::default()
    };
    if candidate.is_empty() && required.is_empty() {
        ev.jaccard = 1.0;
        return (cfg.both_empty, ev);
    }
    ev.matched = candidate.intersection(required).cloned().collect();
    let union = candidate.union(required).count();
    ev.jaccard = ev.matched.len() as f64 / union as f64;
    let max_hops = cfg.bonus_hop_weights.len() as u8;
    let mut bonus = 0.0;
    for s in required.difference(candidate) {
        let path = if candidate.is_empty() {
            None
        } else {
            graph.shortest_path(candidate, s, max_hops)
        };
        match path {
            Some(path) if path.hop_count > 0 => {
                let credit =
                    cfg.bonus_hop_weights[path.hop_count as usize - 1] / required.len() as f64;
                bonus += credit;
                ev.bonus.push(SkillBonus {
                    job_skill: s.clone(),
                    path,
                    credit,
                });
            }
            _ => ev.missing.push(s.clone()),
        }
    }
    ((ev.jaccard + bonus).min(1.0), ev)
}

pub fn factor_experience(
    candidate: Level,
    job: Level,
    cfg: &RerankConfig,
) -> (f64, ExperienceEvidence) {
    let distance = candidate.distance(job);
    let phi = match distance {
        Some(d) => (1.0 - d as f64 / cfg.experience_max_distance).clamp(0.0, 1.0),
        None => cfg.neutral,
    };
    (
        phi,
        ExperienceEvidence {
            candidate,
            job,
            distance,
        },
    )
}

pub fn factor_location(
    c: &CandidateProfile,
    j: &JobPosting,
    cfg: &LocationFactorConfig,
) -> (f64, LocationEvidence) {
    let job_location = (!j.location.is_unspecified()).then(|| j.location.to_string());
    let ev = |tier, pref: Option<&crate::model::Location>| LocationEvidence {
        tier,
        job_location: job_location.clone(),
        matched_preference: pref.map(|p| p.to_string()),
    };
    if let Some(p) = c
        .preferred_locations
        .iter()
        .find(|p| p.same_city(&j.location))
    {
        return (cfg.exact, ev(LocationTier::Exact, Some(p)));
    }
    if j.location.remote_allowed && c.remote_preference {
        return (cfg.remote, ev(LocationTier::Remote, None));
    }
    if let Some(p) = c
        .preferred_locations
        .iter()
        .find(|p| p.same_state(&j.location))
    {
        return (cfg.state, ev(LocationTier::State, Some(p)));
    }
    let candidate_missing =
        c.preferred_locations.iter().all(|p| p.is_unspecified()) && !c.remote_preference;
    let job_missing = j.location.is_unspecified() && !j.location.remote_allowed;
    if candidate_missing || job_missing {
        (cfg.missing, ev(LocationTier::Missing, None))
    } else {
        (cfg.none, ev(LocationTier::None, None))
    }
}

pub fn factor_salary(
    expectation: Option<f64>,
    j: &JobPosting,
    neutral: f64,
) -> (f64, SalaryEvidence) {
    let midpoint = j.salary_midpoint();
    let phi = match (expectation, midpoint) {
        (Some(e), Some(m)) if e > 0.0 => {
            if e <= m {
                1.0
            } else {
                (m / e).clamp(0.0, 1.0)
            }
        }
        (Some(_), Some(_)) => 1.0,
        _ => neutral,
    };
    (
        phi,
        SalaryEvidence {
            expectation,
            midpoint,
        },
    )
}

pub fn factor_semantic(candidate: &[f64], job: &[f64]) -> (f64, SemanticEvidence) {
    let cosine = dot(candidate, job).clamp(-1.0, 1.0);
    ((cosine + 1.0) / 2.0, SemanticEvidence { cosine })
}

pub fn factor_company(
    c: &CandidateProfile,
    j: &JobPosting,
    cfg: &CompanyFactorConfig,
    neutral: f64,
) -> (f64, CompanyEvidence) {
    let norm = |s: &str| s.trim().to_lowercase();
    let pref_match = |prefs: &BTreeSet<String>, value: &Option<String>| {
        (!prefs.is_empty()).then(|| {
            value
                .as_deref()
                .is_some_and(|v| prefs.iter().any(|p| norm(p) == norm(v)))
        })
    };
    let industry_match = pref_match(&c.preferred_industries, &j.company.industry);
    let size_match = pref_match(&c.preferred_company_sizes, &j.company.size);
    let credit = |m: Option<bool>| match m {
        Some(true) => 1.0,
        Some(false) => 0.0,
        None => neutral,
    };
    let phi = cfg.industry_weight * credit(industry_match) + cfg.size_weight * credit(size_match);
    (
        phi.clamp(0.0, 1.0),
        CompanyEvidence {
            industry: j.company.industry.clone(),
            size: j.company.size.clone(),
            industry_match,
            size_match,
        },
    )
}

/// `U = Σ w_f φ_f`.
pub fn utility(phi: &FactorVector, w: &WeightVector) -> f64 {
    Factor::ALL.iter().map(|&f| w.get(f) * phi.get(f)).sum()
}

/// Weight-independent factor values for one job; the reusable cache entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredJob {
    pub job_id: String,
    pub phi: FactorVector,
    pub evidence: FactorEvidence,
}

impl ScoredJob {
    pub fn with_weights(&self, w: &WeightVector) -> FactorScores {
        FactorScores {
            phi: self.phi,
            utility: utility(&self.phi, w),
            weights: *w,
            evidence: self.evidence.clone(),
        }
    }
}

/// Computes all six factors for one job.
pub fn score_job(
    subject: Subject<'_>,
    job: &JobPosting,
    job_embedding: &[f64],
    graph: &KnowledgeGraph,
    cfg: &RerankConfig,
) -> ScoredJob {
    let neutral = cfg.neutral;
    let (phi, evidence) = match subject {
        Subject::Profile { profile, embedding } => {
            let (skill, skill_ev) =
                factor_skill(&profile.skills, &job.required_skills, graph, &cfg.skill);
            let (exp, exp_ev) = factor_experience(profile.experience_level, job.seniority, cfg);
            let (loc, loc_ev) = factor_location(profile, job, &cfg.location);
            let (sal, sal_ev) = factor_salary(profile.salary_expectation, job, neutral);
            let (sem, sem_ev) = factor_semantic(embedding, job_embedding);
            let (com, com_ev) = factor_company(profile, job, &cfg.company, neutral);
            (
                FactorVector::from_array([skill, exp, loc, sal, sem, com]),
                FactorEvidence {
                    skill: skill_ev,
                    experience: Some(exp_ev),
                    location: Some(loc_ev),
                    salary: Some(sal_ev),
                    semantic: sem_ev,
                    company: Some(com_ev),
                },
            )
        }
        Subject::Query { skills, embedding } => {
            let (skill, skill_ev) = factor_skill(skills, &job.required_skills, graph, &cfg.skill);
            let (sem, sem_ev) = match embedding {
                Some(e) => factor_semantic(e, job_embedding),
                None => (neutral, SemanticEvidence { cosine: 0.0 }),
            };
            (
                FactorVector::from_array([skill, neutral, neutral, neutral, sem, neutral]),
                FactorEvidence {
                    skill: skill_ev,
                    experience: None,
                    location: None,
                    salary: None,
                    semantic: sem_ev,
                    company: None,
                },
            )
        }
    };
    ScoredJob {
        job_id: job.job_id.clone(),
        phi,
        evidence,
    }
}

/// Orders cached factor rows by utility (desc), ties by job id (asc).
pub fn rank_by_utility(scored: &[ScoredJob], w: &WeightVector) -> (RankedList, Vec<FactorScores>) {
    let mut rows: Vec<(f64, &ScoredJob)> = scored.iter().map(|s| (utility(&s.phi, w), s)).collect();
    rows.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| a.1.job_id.cmp(&b.1.job_id))
    });
    let k = rows.len().max(1);
    let list = RankedList {
        channel: Channel::Reranked,
        entries: rows
            .iter()
            .map(|(u, s)| crate::model::RankedEntry {
                job_id: s.job_id.clone(),
                score: *u,
            })
            .collect(),
        k_requested: k,
    };
    let factors = rows.iter().map(|(_, s)| s.with_weights(w)).collect();
    (list, factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Location;
    use proptest::prelude::*;

    fn sid(s: &str) -> SkillId {
        SkillId::new(s)
    }

    fn set(items: &[&str]) -> BTreeSet<SkillId> {
        items.iter().map(|s| sid(s)).collect()
    }

    fn empty_graph() -> KnowledgeGraph {
        KnowledgeGraph::default()
    }

    #[test]
    fn skill_factor_examples() {
        let cfg = SkillFactorConfig::default();
        let g = empty_graph();
        assert_eq!(
            factor_skill(&set(&["python", "sql"]), &set(&["python", "sql"]), &g, &cfg).0,
            1.0
        );
        assert_eq!(factor_skill(&set(&["a"]), &set(&["b"]), &g, &cfg).0, 0.0);
        assert_eq!(factor_skill(&set(&[]), &set(&[]), &g, &cfg).0, 1.0);

        let known = set(&["kubernetes", "container-orchestration"]);
        let (g, _) = KnowledgeGraph::build(
            [],
            [],
            &[(sid("kubernetes"), sid("container-orchestration"))],
            &known,
        );
        let (phi, ev) = factor_skill(
            &set(&["kubernetes"]),
            &set(&["container-orchestration"]),
            &g,
            &cfg,
        );
        assert_eq!(phi, 0.5);
        assert_eq!(
            ev.bonus[0].path.nodes,
            [sid("kubernetes"), sid("container-orchestration")]
        );
    }

    #[test]
    fn experience_factor_examples() {
        let cfg = RerankConfig::default();
        assert_eq!(factor_experience(Level::Mid, Level::Mid, &cfg).0, 1.0);
        assert_eq!(factor_experience(Level::Mid, Level::Senior, &cfg).0, 0.5);
        assert_eq!(factor_experience(Level::Junior, Level::Senior, &cfg).0, 0.0);
        assert_eq!(
            factor_experience(Level::Unknown, Level::Senior, &cfg).0,
            0.5
        );
    }

    fn profile() -> CandidateProfile {
        CandidateProfile {
            profile_id: "c".into(),
            ..Default::default()
        }
    }

    fn posting() -> JobPosting {
        JobPosting {
            job_id: "j".into(),
            ..Default::default()
        }
    }

    #[test]
    fn location_tiers() {
        let cfg = LocationFactorConfig::default();
        let mut c = profile();
        c.preferred_locations = vec![Location::new("New York", "NY")];
        let mut j = posting();
        j.location = Location::new("New York", "NY");
        let (phi, ev) = factor_location(&c, &j, &cfg);
        assert_eq!((phi, ev.tier), (1.0, LocationTier::Exact));

        c.remote_preference = true;
        j.location = Location::new("Albany", "NY");
        assert_eq!(factor_location(&c, &j, &cfg).1.tier, LocationTier::State);
        assert_eq!(factor_location(&c, &j, &cfg).0, 0.6);

        j.location = Location::new("Newark", "NJ");
        j.location.remote_allowed = true;
        assert_eq!(factor_location(&c, &j, &cfg).0, 0.9);

        j.location.remote_allowed = false;
        assert_eq!(factor_location(&c, &j, &cfg).0, 0.0);

        assert_eq!(factor_location(&profile(), &j, &cfg).0, 0.5);
        c.remote_preference = false;
        assert_eq!(factor_location(&c, &posting(), &cfg).0, 0.5);
    }

    #[test]
    fn salary_examples() {
        let mut j = posting();
        j.salary_min = Some(90_000.0);
        j.salary_max = Some(110_000.0);
        assert_eq!(factor_salary(Some(90_000.0), &j, 0.5).0, 1.0);
        assert!((factor_salary(Some(120_000.0), &j, 0.5).0 - 0.833_333).abs() < 1e-4);
        assert_eq!(factor_salary(Some(120_000.0), &posting(), 0.5).0, 0.5);
        assert_eq!(factor_salary(None, &j, 0.5).0, 0.5);
    }

    #[test]
    fn semantic_examples() {
        assert_eq!(factor_semantic(&[1.0, 0.0], &[1.0, 0.0]).0, 1.0);
        assert_eq!(factor_semantic(&[1.0, 0.0], &[0.0, 1.0]).0, 0.5);
        assert_eq!(factor_semantic(&[1.0, 0.0], &[-1.0, 0.0]).0, 0.0);
    }

    #[test]
    fn company_examples() {
        let cfg = CompanyFactorConfig::default();
        let mut c = profile();
        let mut j = posting();
        j.company.industry = Some("finance".into());
        j.company.size = Some("large".into());
        assert_eq!(factor_company(&c, &j, &cfg, 0.5).0, 0.5);
        c.preferred_industries = BTreeSet::from(["Finance".to_string()]);
        c.preferred_company_sizes = BTreeSet::from(["large".to_string()]);
        assert_eq!(factor_company(&c, &j, &cfg, 0.5).0, 1.0);
        c.preferred_company_sizes = BTreeSet::from(["small".to_string()]);
        assert!((factor_company(&c, &j, &cfg, 0.5).0 - 0.7).abs() < 1e-12);
    }

    #[test]
    fn utility_examples() {
        let w = WeightVector::default();
        assert!((utility(&FactorVector::uniform(1.0), &w) - 1.0).abs() < 1e-12);
        assert_eq!(utility(&FactorVector::uniform(0.0), &w), 0.0);
        assert!((utility(&FactorVector::uniform(0.5), &w) - 0.5).abs() < 1e-12);
        let phi = FactorVector::from_array([0.8, 1.0, 1.0, 0.5, 0.7, 0.0]);
        assert!((utility(&phi, &w) - 0.80).abs() < 1e-12);
    }

    #[test]
    fn weights_renormalize_and_reject_bad_input() {
        let w = WeightVector::normalize(FactorVector {
            skill: 7.0,
            salary: 3.0,
            ..Default::default()
        })
        .unwrap();
        assert!((w.get(Factor::Skill) - 0.7).abs() < 1e-12);
        assert!((w.get(Factor::Salary) - 0.3).abs() < 1e-12);
        assert_eq!(
            WeightVector::normalize(FactorVector::default()),
            Err(WeightError::AllZero)
        );
        assert!(WeightVector::normalize(FactorVector::uniform(-1.0)).is_err());
        let parsed: WeightVector = serde_json::from_str(r#"{"skill": 7, "salary": 3}"#).unwrap();
        assert_eq!(parsed, w);
    }

    fn row(id: &str, phi: [f64; 6]) -> ScoredJob {
        ScoredJob {
            job_id: id.into(),
            phi: FactorVector::from_array(phi),
            evidence: FactorEvidence {
                skill: SkillEvidence::default(),
                experience: None,
                location: None,
                salary: None,
                semantic: SemanticEvidence { cosine: 0.0 },
                company: None,
            },
        }
    }

    #[test]
    fn salary_weight_flips_order() {
        let a = row("a", [0.9, 0.5, 0.5, 0.2, 0.5, 0.5]);
        let b = row("b", [0.6, 0.5, 0.5, 1.0, 0.5, 0.5]);
        let rows = [a, b];
        let default = rank_by_utility(&rows, &WeightVector::default()).0;
        assert_eq!(default.ids().collect::<Vec<_>>(), ["a", "b"]);
        let mut raw = default_raw_weights();
        raw.salary = 0.60;
        let salary_heavy = rank_by_utility(&rows, &WeightVector::normalize(raw).unwrap()).0;
        assert_eq!(salary_heavy.ids().collect::<Vec<_>>(), ["b", "a"]);
    }

    #[test]
    fn single_job_always_first() {
        let rows = [row("only", [0.1; 6])];
        let (list, scores) = rank_by_utility(&rows, &WeightVector::default());
        assert_eq!(list.ids().collect::<Vec<_>>(), ["only"]);
        assert_eq!(scores.len(), 1);
    }

    fn arb_phi() -> impl Strategy<Value = [f64; 6]> {
        proptest::array::uniform6(0.0f64..=1.0)
    }

    proptest! {
        #[test]
        fn scaling_weights_keeps_order(rows in proptest::collection::vec(arb_phi(), 1..15), raw in proptest::array::uniform6(0.01f64..5.0), scale in 0.01f64..100.0) {
            let rows: Vec<ScoredJob> = rows.into_iter().enumerate().map(|(i, p)| row(&format!("j{i:02}"), p)).collect();
            let w1 = WeightVector::normalize(FactorVector::from_array(raw)).unwrap();
            let w2 = WeightVector::normalize(FactorVector::from_array(raw.map(|x| x * scale))).unwrap();
            let a = rank_by_utility(&rows, &w1).0;
            let b = rank_by_utility(&rows, &w2).0;
            prop_assert_eq!(a.ids().collect::<Vec<_>>(), b.ids().collect::<Vec<_>>());
        }

        #[test]
        fn cached_rerank_equals_fresh(rows in proptest::collection::vec(arb_phi(), 1..10), raw in proptest::array::uniform6(0.01f64..5.0)) {
            let rows: Vec<ScoredJob> = rows.into_iter().enumerate().map(|(i, p)| row(&format!("j{i:02}"), p)).collect();
            let w = WeightVector::normalize(FactorVector::from_array(raw)).unwrap();
            let _ = rank_by_utility(&rows, &WeightVector::default());
            let cached = rank_by_utility(&rows, &w);
            let fresh: Vec<ScoredJob> = rows.to_vec();
            prop_assert_eq!(cached, rank_by_utility(&fresh, &w));
        }
    }
}
