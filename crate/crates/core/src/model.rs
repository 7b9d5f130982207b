//! Domain types shared by every stage of the engine.
//!
//! All types serialize to the canonical snake_case JSON used by the ingest
//! format, the HTTP API and benchmark manifests.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Canonical skill identifier (lowercase, no whitespace, e.g. `machine-learning`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SkillId(String);

impl SkillId {
    pub fn new(id: impl Into<String>) -> Self {
        SkillId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SkillId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SkillId {
    fn from(s: &str) -> Self {
        SkillId(s.to_string())
    }
}

impl AsRef<str> for SkillId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Seniority level. The ordinal mapping (junior=0, mid=1, senior=2) is part of
/// the contract; `Unknown` has no ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Junior,
    Mid,
    Senior,
    #[default]
    Unknown,
}

impl Level {
    pub fn ordinal(self) -> Option<u8> {
        match self {
            Level::Junior => Some(0),
            Level::Mid => Some(1),
            Level::Senior => Some(2),
            Level::Unknown => None,
        }
    }

    /// Ordinal distance, defined only when both levels are known.
    pub fn distance(self, other: Level) -> Option<u8> {
        Some(self.ordinal()?.abs_diff(other.ordinal()?))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Junior => "junior",
            Level::Mid => "mid",
            Level::Senior => "senior",
            Level::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Degree ladder: none < bachelor < master < doctorate.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Degree {
    #[default]
    None,
    Bachelor,
    Master,
    Doctorate,
}

impl Degree {
    pub fn as_str(self) -> &'static str {
        match self {
            Degree::None => "none",
            Degree::Bachelor => "bachelor",
            Degree::Master => "master",
            Degree::Doctorate => "doctorate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Location {
    #[serde(default)]
    pub city: Option<String>,
    #[serde(default)]
    pub state: Option<String>,
    #[serde(default)]
    pub remote_allowed: bool,
}

impl Location {
    pub fn new(city: &str, state: &str) -> Self {
        Location {
            city: Some(city.to_string()),
            state: Some(state.to_string()),
            remote_allowed: false,
        }
    }

    pub fn remote() -> Self {
        Location {
            city: None,
            state: None,
            remote_allowed: true,
        }
    }

    /// No city, no state and no remote flag.
    pub fn is_unspecified(&self) -> bool {
        self.city.is_none() && self.state.is_none() && !self.remote_allowed
    }

    /// Same city (case-insensitive); when both sides carry a state it must agree too.
    pub fn same_city(&self, other: &Location) -> bool {
        let city = match (&self.city, &other.city) {
            (Some(a), Some(b)) => a.trim().eq_ignore_ascii_case(b.trim()),
            _ => false,
        };
        let state_compatible = match (&self.state, &other.state) {
            (Some(a), Some(b)) => a.trim().eq_ignore_ascii_case(b.trim()),
            _ => true,
        };
        city && state_compatible
    }

    pub fn same_state(&self, other: &Location) -> bool {
        match (&self.state, &other.state) {
            (Some(a), Some(b)) => a.trim().eq_ignore_ascii_case(b.trim()),
            _ => false,
        }
    }

    /// Graph node key for this location, e.g. `brooklyn, ny`.
    pub fn node_key(&self) -> Option<String> {
        match (&self.city, &self.state) {
            (Some(c), Some(s)) => Some(format!("{}, {}", c.trim(), s.trim()).to_lowercase()),
            (Some(c), None) => Some(c.trim().to_lowercase()),
            (None, Some(s)) => Some(s.trim().to_lowercase()),
            (None, None) if self.remote_allowed => Some("remote".to_string()),
            (None, None) => None,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.city, &self.state) {
            (Some(c), Some(s)) => write!(f, "{c}, {s}")?,
            (Some(c), None) => write!(f, "{c}")?,
            (None, Some(s)) => write!(f, "{s}")?,
            (None, None) => {}
        }
        if self.remote_allowed {
            if self.city.is_some() || self.state.is_some() {
                write!(f, " (remote allowed)")?;
            } else {
                write!(f, "Remote")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CompanyRef {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub industry: Option<String>,
    /// Size bucket tag such as `small`, `medium`, `large`, `enterprise`.
    #[serde(default)]
    pub size: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct JobPosting {
    pub job_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub required_skills: BTreeSet<SkillId>,
    #[serde(default)]
    pub preferred_skills: BTreeSet<SkillId>,
    #[serde(default)]
    pub location: Location,
    #[serde(default)]
    pub salary_min: Option<f64>,
    #[serde(default)]
    pub salary_max: Option<f64>,
    #[serde(default)]
    pub seniority: Level,
    #[serde(default)]
    pub company: CompanyRef,
    #[serde(default)]
    pub degree_required: Degree,
    #[serde(default)]
    pub visa_sponsorship: bool,
    #[serde(default)]
    pub certifications_required: BTreeSet<String>,
}

impl JobPosting {
    /// Required ∪ preferred skills.
    pub fn all_skills(&self) -> BTreeSet<SkillId> {
        self.required_skills
            .union(&self.preferred_skills)
            .cloned()
            .collect()
    }

    /// Required skills, then preferred skills not also required.
    pub fn all_skills_iter(&self) -> impl Iterator<Item = &SkillId> {
        self.required_skills.iter().chain(
            self.preferred_skills
                .iter()
                .filter(|s| !self.required_skills.contains(*s)),
        )
    }

    /// Band midpoint; a one-sided band uses its single bound.
    pub fn salary_midpoint(&self) -> Option<f64> {
        match (self.salary_min, self.salary_max) {
            (Some(lo), Some(hi)) => Some((lo + hi) / 2.0),
            (Some(v), None) | (None, Some(v)) => Some(v),
            (None, None) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConstraintSet {
    #[serde(default)]
    pub needs_visa_sponsorship: bool,
    /// The candidate's attained degree; when set, jobs requiring more are removed.
    #[serde(default)]
    pub min_degree: Option<Degree>,
    /// Certifications the candidate holds; when set, jobs requiring any
    /// certification outside this set are removed.
    #[serde(default)]
    pub required_certifications: Option<BTreeSet<String>>,
}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        !self.needs_visa_sponsorship
            && self.min_degree.is_none()
            && self.required_certifications.is_none()
    }

    /// Whether `job` is eligible under these constraints.
    pub fn admits(&self, job: &JobPosting) -> bool {
        if self.needs_visa_sponsorship && !job.visa_sponsorship {
            return false;
        }
        if let Some(held) = self.min_degree {
            if job.degree_required > held {
                return false;
            }
        }
        if let Some(certs) = &self.required_certifications {
            let held: BTreeSet<String> = certs.iter().map(|c| c.trim().to_lowercase()).collect();
            if job
                .certifications_required
                .iter()
                .any(|c| !held.contains(&c.trim().to_lowercase()))
            {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CandidateProfile {
    pub profile_id: String,
    #[serde(default)]
    pub name: Option<String>,
    /// Title-like headline (current or target role).
    #[serde(default)]
    pub headline: Option<String>,
    #[serde(default)]
    pub skills: BTreeSet<SkillId>,
    #[serde(default)]
    pub experience_level: Level,
    #[serde(default)]
    pub years_experience: Option<f64>,
    #[serde(default)]
    pub preferred_locations: Vec<Location>,
    #[serde(default)]
    pub remote_preference: bool,
    #[serde(default)]
    pub salary_expectation: Option<f64>,
    #[serde(default)]
    pub education: Degree,
    #[serde(default)]
    pub preferred_industries: BTreeSet<String>,
    #[serde(default)]
    pub preferred_company_sizes: BTreeSet<String>,
    #[serde(default)]
    pub hard_constraints: ConstraintSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Lexical,
    Semantic,
    Graph,
    Fused,
    Reranked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub job_id: String,
    pub score: f64,
}

/// Ranked job ids: score descending, ties by job id ascending, no duplicates,
/// at most `k_requested` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub channel: Channel,
    pub entries: Vec<RankedEntry>,
    pub k_requested: usize,
}

fn rank_order(a: &RankedEntry, b: &RankedEntry) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.job_id.cmp(&b.job_id))
}

impl RankedList {
    pub fn empty(channel: Channel, k: usize) -> Self {
        RankedList {
            channel,
            entries: Vec::new(),
            k_requested: k,
        }
    }

    /// Builds a list from an unordered score map. Duplicate ids keep their
    /// highest score. `k` must be positive.
    pub fn from_scores<I, S>(channel: Channel, scores: I, k: usize) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        assert!(k > 0, "k_requested must be positive");
        let mut best: HashMap<String, f64> = HashMap::new();
        for (id, score) in scores {
            let entry = best.entry(id.into()).or_insert(f64::NEG_INFINITY);
            if score > *entry {
                *entry = score;
            }
        }
        let mut entries: Vec<RankedEntry> = best
            .into_iter()
            .map(|(job_id, score)| RankedEntry { job_id, score })
            .collect();
        entries.sort_by(rank_order);
        entries.truncate(k);
        RankedList {
            channel,
            entries,
            k_requested: k,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.job_id.as_str())
    }

    /// 1-based rank of `job_id`, if present.
    pub fn rank_of(&self, job_id: &str) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.job_id == job_id)
            .map(|p| p + 1)
    }

    /// Keeps entries satisfying `keep`, preserving order.
    pub fn retain(&self, mut keep: impl FnMut(&RankedEntry) -> bool) -> RankedList {
        RankedList {
            channel: self.channel,
            entries: self.entries.iter().filter(|e| keep(e)).cloned().collect(),
            k_requested: self.k_requested,
        }
    }

    /// Checks the ordering, uniqueness and size invariants.
    pub fn is_well_formed(&self) -> bool {
        if self.entries.len() > self.k_requested {
            return false;
        }
        let mut seen = BTreeSet::new();
        if !self.entries.iter().all(|e| seen.insert(e.job_id.as_str())) {
            return false;
        }
        self.entries
            .windows(2)
            .all(|w| rank_order(&w[0], &w[1]) == std::cmp::Ordering::Less)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("job_id is missing or blank")]
    MissingJobId,
    #[error("job {job_id}: salary_min {min} exceeds salary_max {max}")]
    SalaryBandInverted { job_id: String, min: f64, max: f64 },
    #[error("job {job_id}: {field} must be a non-negative number")]
    InvalidSalary { job_id: String, field: &'static str },
    #[error("job {job_id}: unknown skill ids {skills:?}")]
    UnknownSkillId {
        job_id: String,
        skills: Vec<SkillId>,
    },
}

impl ValidationError {
    /// Name of the offending field.
    pub fn field(&self) -> &'static str {
        match self {
            ValidationError::MissingJobId => "job_id",
            ValidationError::SalaryBandInverted { .. } => "salary_min",
            ValidationError::InvalidSalary { field, .. } => field,
            ValidationError::UnknownSkillId { .. } => "required_skills",
        }
    }
}

/// Checks posting invariants. With `strict_vocabulary` set, every skill must be
/// one of its canonical ids. A valid posting is returned unchanged.
pub fn validate_posting(
    posting: JobPosting,
    strict_vocabulary: Option<&BTreeSet<SkillId>>,
) -> Result<JobPosting, ValidationError> {
    if posting.job_id.trim().is_empty() {
        return Err(ValidationError::MissingJobId);
    }
    for (field, value) in [
        ("salary_min", posting.salary_min),
        ("salary_max", posting.salary_max),
    ] {
        if let Some(v) = value {
            if !v.is_finite() || v < 0.0 {
                return Err(ValidationError::InvalidSalary {
                    job_id: posting.job_id.clone(),
                    field,
                });
            }
        }
    }
    if let (Some(min), Some(max)) = (posting.salary_min, posting.salary_max) {
        if min > max {
            return Err(ValidationError::SalaryBandInverted {
                job_id: posting.job_id.clone(),
                min,
                max,
            });
        }
    }
    if let Some(vocab) = strict_vocabulary {
        let unknown: Vec<SkillId> = posting
            .required_skills
            .iter()
            .chain(&posting.preferred_skills)
            .filter(|s| !vocab.contains(*s))
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if !unknown.is_empty() {
            return Err(ValidationError::UnknownSkillId {
                job_id: posting.job_id.clone(),
                skills: unknown,
            });
        }
    }
    Ok(posting)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn posting(id: &str) -> JobPosting {
        JobPosting {
            job_id: id.to_string(),
            title: "Data Analyst".into(),
            description: "Analyze data".into(),
            required_skills: ["sql".into(), "excel".into()].into_iter().collect(),
            salary_min: Some(60_000.0),
            salary_max: Some(80_000.0),
            ..Default::default()
        }
    }

    #[test]
    fn inverted_band_is_rejected() {
        let mut p = posting("j1");
        p.salary_min = Some(80_000.0);
        p.salary_max = Some(60_000.0);
        let err = validate_posting(p, None).unwrap_err();
        assert!(matches!(err, ValidationError::SalaryBandInverted { .. }));
        assert_eq!(err.field(), "salary_min");
    }

    #[test]
    fn empty_job_id_is_rejected() {
        assert_eq!(
            validate_posting(posting(""), None),
            Err(ValidationError::MissingJobId)
        );
        assert_eq!(
            validate_posting(posting("   "), None),
            Err(ValidationError::MissingJobId)
        );
    }

    #[test]
    fn valid_posting_is_returned_unchanged() {
        let p = posting("j1");
        assert_eq!(validate_posting(p.clone(), None).unwrap(), p);
    }

    #[test]
    fn strict_mode_flags_unknown_skills() {
        let vocab: BTreeSet<SkillId> = ["sql".into()].into_iter().collect();
        let err = validate_posting(posting("j1"), Some(&vocab)).unwrap_err();
        assert_eq!(
            err,
            ValidationError::UnknownSkillId {
                job_id: "j1".into(),
                skills: vec!["excel".into()]
            }
        );
    }

    #[test]
    fn negative_salary_is_rejected() {
        let mut p = posting("j1");
        p.salary_min = Some(-1.0);
        assert!(matches!(
            validate_posting(p, None),
            Err(ValidationError::InvalidSalary { .. })
        ));
    }

    #[test]
    fn level_distance_needs_known_levels() {
        assert_eq!(Level::Junior.distance(Level::Senior), Some(2));
        assert_eq!(Level::Mid.distance(Level::Mid), Some(0));
        assert_eq!(Level::Unknown.distance(Level::Senior), None);
    }

    #[test]
    fn canonical_json_field_names() {
        let json = serde_json::to_value(posting("j1")).unwrap();
        for key in [
            "job_id",
            "title",
            "description",
            "required_skills",
            "preferred_skills",
            "location",
            "salary_min",
            "salary_max",
            "seniority",
            "company",
            "degree_required",
            "visa_sponsorship",
            "certifications_required",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["seniority"], "unknown");
        assert_eq!(json["degree_required"], "none");
    }

    #[test]
    fn constraints_admit() {
        let mut job = posting("j1");
        job.visa_sponsorship = false;
        job.degree_required = Degree::Master;
        job.certifications_required.insert("PE".into());

        assert!(ConstraintSet::default().admits(&job));
        let visa = ConstraintSet {
            needs_visa_sponsorship: true,
            ..Default::default()
        };
        assert!(!visa.admits(&job));
        let degree = ConstraintSet {
            min_degree: Some(Degree::Bachelor),
            ..Default::default()
        };
        assert!(!degree.admits(&job));
        let certs = ConstraintSet {
            required_certifications: Some(["pe".to_string()].into_iter().collect()),
            ..Default::default()
        };
        assert!(certs.admits(&job));
        let no_certs = ConstraintSet {
            required_certifications: Some(BTreeSet::new()),
            ..Default::default()
        };
        assert!(!no_certs.admits(&job));
    }

    proptest! {
        #[test]
        fn validate_is_idempotent(
            id in "[a-z0-9]{0,6}",
            lo in proptest::option::of(-10.0f64..200_000.0),
            hi in proptest::option::of(-10.0f64..200_000.0),
        ) {
            let p = JobPosting { job_id: id, salary_min: lo, salary_max: hi, ..Default::default() };
            let once = validate_posting(p, None);
            if let Ok(valid) = &once {
                prop_assert_eq!(validate_posting(valid.clone(), None), once.clone());
            }
        }

        #[test]
        fn ranked_list_is_deterministic(scores in proptest::collection::vec(("[a-e]{1,2}", 0i32..5), 0..30), k in 1usize..10) {
            let items: Vec<(String, f64)> = scores.iter().map(|(id, s)| (id.clone(), *s as f64)).collect();
            let forward = RankedList::from_scores(Channel::Fused, items.clone(), k);
            let mut reversed = items;
            reversed.reverse();
            let backward = RankedList::from_scores(Channel::Fused, reversed, k);
            prop_assert!(forward.is_well_formed());
            prop_assert_eq!(forward, backward);
        }
    }
}
