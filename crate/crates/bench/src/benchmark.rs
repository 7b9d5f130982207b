//! Benchmark construction: templated queries, silver labels and
//! skill-disjoint splits over a frozen index bundle.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use jobmatch_core::pipeline::{enrich_text, PipelineError};
use jobmatch_core::text::tokenize;
use jobmatch_core::{EngineConfig, IndexBundle, JobPosting, Level, SkillId};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::splits::{split_skill_disjoint, unseen_fraction, Split};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark config: {0}")]
    InvalidConfig(&'static str),
    #[error("corpus supports only {found} of {wanted} {template} queries")]
    InsufficientCorpus {
        template: Template,
        wanted: usize,
        found: usize,
    },
    #[error("benchmark was built on corpus {expected}, bundle is {found}")]
    CorpusFingerprintMismatch { expected: String, found: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("templates: {0}")]
    Templates(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Template {
    Title,
    Natural,
    Synonym,
}

impl Template {
    pub const ALL: [Template; 3] = [Template::Title, Template::Natural, Template::Synonym];

    pub fn as_str(self) -> &'static str {
        match self {
            Template::Title => "title",
            Template::Natural => "natural",
            Template::Synonym => "synonym",
        }
    }
}

impl std::fmt::Display for Template {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Paraphrase templates for natural-language queries. Placeholders:
/// `{seniority}`, `{domain}`, `{skill}`, `{place}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QueryTemplates {
    pub natural: Vec<String>,
    pub place_city: String,
    pub place_remote: String,
    pub unknown_seniority: String,
}

impl Default for QueryTemplates {
    fn default() -> Self {
        QueryTemplates {
            natural: vec![
                "{seniority} {domain} role {place}".into(),
                "looking for {seniority} {domain} work {place} with {skill}".into(),
                "{seniority} {domain} job {place} using {skill}".into(),
                "{domain} opportunity {place} for someone strong in {skill}".into(),
            ],
            place_city: "in {city}".into(),
            place_remote: "working remotely".into(),
            unknown_seniority: "experienced".into(),
        }
    }
}

impl QueryTemplates {
    pub fn from_toml_str(text: &str) -> Result<Self, BenchError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub queries_per_template: usize,
    /// Jaccard threshold τ; a pair is positive when the overlap strictly exceeds it.
    pub silver_threshold: f64,
    pub expansion_depth: usize,
    /// (train, dev, test)
    pub split_sizes: [usize; 3],
    pub random_seed: u64,
    pub templates: QueryTemplates,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            queries_per_template: 10,
            silver_threshold: 0.3,
            expansion_depth: 2,
            split_sizes: [10, 10, 10],
            random_seed: 42,
            templates: QueryTemplates::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if !(self.silver_threshold > 0.0 && self.silver_threshold < 1.0) {
            return Err(BenchError::InvalidConfig(
                "silver_threshold must lie in (0, 1)",
            ));
        }
        if self.split_sizes.iter().sum::<usize>() != self.queries_per_template * Template::ALL.len()
        {
            return Err(BenchError::InvalidConfig(
                "split sizes must sum to the total query count",
            ));
        }
        if self.templates.natural.is_empty() {
            return Err(BenchError::InvalidConfig(
                "at least one natural-language template is required",
            ));
        }
        Ok(())
    }
}

/// Structured slice keys taken from the query text and its source posting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slices {
    /// `located`, `remote` or `unspecified`.
    pub location: String,
    /// `band` or `unknown`.
    pub salary: String,
    pub seniority: String,
}

impl Slices {
    fn unknown() -> Self {
        Slices {
            location: "unspecified".into(),
            salary: "unknown".into(),
            seniority: Level::Unknown.as_str().into(),
        }
    }

    pub fn pairs(&self) -> [(&'static str, &str); 3] {
        [
            ("location", self.location.as_str()),
            ("salary", self.salary.as_str()),
            ("seniority", self.seniority.as_str()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchQuery {
    pub query_id: String,
    pub text: String,
    pub template: Template,
    pub split: Split,
    /// Canonical skills recognized in the text.
    pub skills: BTreeSet<SkillId>,
    pub source_job: Option<String>,
    pub slices: Slices,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub query_id: String,
    pub job_id: String,
}

pub const CIRCULARITY_WARNING: &str = "silver labels are derived from canonical skill overlap, the same signal that \
drives the reranker skill factor; reranked scores on silver labels are optimistic. Supply gold labels to remove the bias.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: BenchmarkConfig,
    pub corpus_fingerprint: String,
    pub corpus_size: usize,
    pub engine: EngineConfig,
    pub query_counts: BTreeMap<Template, usize>,
    /// Positive (query, job) pairs.
    pub silver_positive_pairs: usize,
    /// Every (query, job) pair that was judged.
    pub silver_judged_pairs: usize,
    pub unseen_test_skill_fraction: f64,
    pub circularity_warning: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub queries: Vec<BenchQuery>,
    pub silver_labels: Vec<Label>,
    pub manifest: Manifest,
    /// Human judgements; used instead of silver labels when present.
    #[serde(default)]
    pub gold_labels: Option<Vec<Label>>,
}

impl Benchmark {
    pub fn labels(&self) -> &[Label] {
        self.gold_labels.as_deref().unwrap_or(&self.silver_labels)
    }

    pub fn label_source(&self) -> &'static str {
        if self.gold_labels.is_some() {
            "gold"
        } else {
            "silver"
        }
    }

    pub fn positives(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut out: BTreeMap<String, BTreeSet<String>> = self
            .queries
            .iter()
            .map(|q| (q.query_id.clone(), BTreeSet::new()))
            .collect();
        for l in self.labels() {
            out.entry(l.query_id.clone())
                .or_default()
                .insert(l.job_id.clone());
        }
        out
    }

    pub fn check_corpus(&self, bundle: &IndexBundle) -> Result<(), BenchError> {
        if self.manifest.corpus_fingerprint != bundle.fingerprint() {
            return Err(BenchError::CorpusFingerprintMismatch {
                expected: self.manifest.corpus_fingerprint.clone(),
                found: bundle.fingerprint().to_string(),
            });
        }
        Ok(())
    }

    /// Pretty JSON with a trailing newline. Field and map order are fixed, so
    /// equal benchmarks serialize to identical bytes.
    pub fn to_json(&self) -> Result<String, BenchError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), BenchError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Queries assigned to `split`.
    pub fn split_of(&self, split: Split) -> impl Iterator<Item = &BenchQuery> {
        self.queries.iter().filter(move |q| q.split == split)
    }
}

pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Jobs whose required ∪ preferred skills overlap `expanded` with Jaccard
/// strictly above `tau`.
pub fn silver_positives(
    expanded: &BTreeSet<SkillId>,
    postings: &[JobPosting],
    tau: f64,
) -> BTreeSet<String> {
    if expanded.is_empty() {
        return BTreeSet::new();
    }
    postings
        .iter()
        .filter(|p| jaccard(expanded, &p.all_skills()) > tau)
        .map(|p| p.job_id.clone())
        .collect()
}

/// Query skills (as recognized by enrichment) and their graph expansion.
pub fn query_skills(
    text: &str,
    bundle: &IndexBundle,
    depth: usize,
) -> Result<(BTreeSet<SkillId>, BTreeSet<SkillId>), BenchError> {
    let (sq, _) = enrich_text(text, bundle)?;
    let expanded = bundle
        .graph()
        .expand_skills(&sq.skills, depth)
        .into_keys()
        .collect();
    Ok((sq.skills, expanded))
}

pub fn silver_label(
    text: &str,
    bundle: &IndexBundle,
    tau: f64,
    depth: usize,
) -> Result<BTreeSet<String>, BenchError> {
    let (_, expanded) = query_skills(text, bundle, depth)?;
    Ok(silver_positives(&expanded, bundle.postings(), tau))
}

struct Candidate {
    text: String,
    template: Template,
    skills: BTreeSet<SkillId>,
    source_job: Option<String>,
    slices: Slices,
    positives: BTreeSet<String>,
}

fn slices_for(p: &JobPosting, text: &str, templates: &QueryTemplates) -> Slices {
    let lower = text.to_lowercase();
    let location = if p
        .location
        .city
        .as_ref()
        .is_some_and(|c| lower.contains(&c.to_lowercase()))
    {
        "located"
    } else if lower.contains(&templates.place_remote.to_lowercase()) || p.location.remote_allowed {
        "remote"
    } else {
        "unspecified"
    };
    Slices {
        location: location.into(),
        salary: if p.salary_min.is_some() || p.salary_max.is_some() {
            "band".into()
        } else {
            "unknown".into()
        },
        seniority: p.seniority.as_str().into(),
    }
}

struct Generator<'a> {
    bundle: &'a IndexBundle,
    cfg: &'a BenchmarkConfig,
    rng: ChaCha8Rng,
    seen_text: BTreeSet<String>,
}

impl Generator<'_> {
    fn candidate(
        &mut self,
        text: String,
        template: Template,
        source: Option<&JobPosting>,
    ) -> Result<Option<Candidate>, BenchError> {
        let key = tokenize(&text).join(" ");
        if key.is_empty() || self.seen_text.contains(&key) {
            return Ok(None);
        }
        let (skills, expanded) = query_skills(&text, self.bundle, self.cfg.expansion_depth)?;
        let positives =
            silver_positives(&expanded, self.bundle.postings(), self.cfg.silver_threshold);
        if skills.is_empty() || positives.is_empty() {
            return Ok(None);
        }
        self.seen_text.insert(key);
        let slices = match source {
            Some(p) => slices_for(p, &text, &self.cfg.templates),
            None => Slices::unknown(),
        };
        Ok(Some(Candidate {
            text,
            template,
            skills,
            source_job: source.map(|p| p.job_id.clone()),
            slices,
            positives,
        }))
    }

    fn titles(&mut self) -> Result<Vec<Candidate>, BenchError> {
        let mut firsts: BTreeMap<&str, &JobPosting> = BTreeMap::new();
        for p in self.bundle.postings() {
            firsts.entry(p.title.as_str()).or_insert(p);
        }
        let mut titles: Vec<(&str, &JobPosting)> = firsts.into_iter().collect();
        titles.shuffle(&mut self.rng);
        let mut out = Vec::new();
        let mut skill_sets = BTreeSet::new();
        for (title, p) in titles {
            if out.len() == self.cfg.queries_per_template {
                break;
            }
            if let Some(c) = self.candidate(title.to_string(), Template::Title, Some(p))? {
                if skill_sets.insert(c.skills.clone()) {
                    out.push(c);
                }
            }
        }
        Ok(out)
    }

    /// The required skill with the most related skills names the domain.
    fn domain_skill<'b>(&self, p: &'b JobPosting) -> Option<&'b SkillId> {
        let graph = self.bundle.graph();
        p.required_skills
            .iter()
            .max_by_key(|s| (graph.related_skills(s).count(), std::cmp::Reverse(*s)))
    }

    fn natural(&mut self) -> Result<Vec<Candidate>, BenchError> {
        let mut order: Vec<usize> = (0..self.bundle.postings().len()).collect();
        order.shuffle(&mut self.rng);
        let templates = self.cfg.templates.clone();
        let mut out = Vec::new();
        for i in order {
            if out.len() == self.cfg.queries_per_template {
                break;
            }
            let p = &self.bundle.postings()[i];
            let Some(domain) = self.domain_skill(p) else {
                continue;
            };
            let others: Vec<&SkillId> = p.required_skills.iter().filter(|s| *s != domain).collect();
            let Some(skill) = others.choose(&mut self.rng).copied() else {
                continue;
            };
            let template = templates
                .natural
                .choose(&mut self.rng)
                .expect("validated non-empty");
            let place = match &p.location.city {
                Some(c) => templates.place_city.replace("{city}", c),
                None => templates.place_remote.clone(),
            };
            let seniority = match p.seniority {
                Level::Unknown => templates.unknown_seniority.clone(),
                Level::Mid => "mid-level".to_string(),
                l => l.as_str().to_string(),
            };
            let synonyms = self.bundle.synonyms();
            let text = template
                .replace("{seniority}", &seniority)
                .replace("{domain}", synonyms.display_name(domain))
                .replace("{skill}", synonyms.display_name(skill))
                .replace("{place}", &place);
            if let Some(c) = self.candidate(text, Template::Natural, Some(p))? {
                out.push(c);
            }
        }
        Ok(out)
    }

    /// Surface forms whose tokens never occur in the index and whose
    /// canonical skill reaches at least one posting through the graph.
    fn unseen_surface_forms(&self) -> Vec<(String, SkillId)> {
        let lexical = self.bundle.lexical();
        let graph = self.bundle.graph();
        let mut forms: Vec<(String, SkillId)> = self
            .bundle
            .synonyms()
            .surface_forms()
            .filter(|(surface, id)| *surface != id.as_str())
            .filter(|(surface, _)| {
                let tokens = tokenize(surface);
                !tokens.is_empty() && tokens.iter().all(|t| !lexical.contains_term(t))
            })
            .filter(|(_, id)| {
                let seeds = BTreeSet::from([(*id).clone()]);
                graph
                    .expand_skills(&seeds, self.cfg.expansion_depth)
                    .keys()
                    .any(|s| graph.jobs_requiring(s).next().is_some())
            })
            .map(|(s, id)| (s.to_string(), id.clone()))
            .collect();
        forms.sort();
        forms
    }

    fn synonyms(&mut self) -> Result<Vec<Candidate>, BenchError> {
        let mut forms = self.unseen_surface_forms();
        forms.shuffle(&mut self.rng);
        let graph = self.bundle.graph();
        let mut out = Vec::new();
        let mut skill_sets = BTreeSet::new();
        for (i, (surface, id)) in forms.iter().enumerate() {
            if out.len() == self.cfg.queries_per_template {
                break;
            }
            // Every other query pairs the form with a related unseen form.
            let partner = (i % 2 == 1)
                .then(|| {
                    forms
                        .iter()
                        .find(|(_, other)| other != id && graph.relatedness(id, other).is_some())
                })
                .flatten();
            let text = match partner {
                Some((p, _)) => format!("{surface} {p}"),
                None => surface.clone(),
            };
            if let Some(c) = self.candidate(text, Template::Synonym, None)? {
                if skill_sets.insert(c.skills.clone()) {
                    out.push(c);
                }
            }
        }
        Ok(out)
    }
}

/// Generates `queries_per_template` queries per template. Every query has at
/// least one recognized skill and at least one silver positive.
fn generate_candidates(
    bundle: &IndexBundle,
    cfg: &BenchmarkConfig,
) -> Result<Vec<Candidate>, BenchError> {
    let mut g = Generator {
        bundle,
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.random_seed),
        seen_text: BTreeSet::new(),
    };
    let mut out = Vec::new();
    for template in Template::ALL {
        let batch = match template {
            Template::Title => g.titles()?,
            Template::Natural => g.natural()?,
            Template::Synonym => g.synonyms()?,
        };
        if batch.len() < cfg.queries_per_template {
            return Err(BenchError::InsufficientCorpus {
                template,
                wanted: cfg.queries_per_template,
                found: batch.len(),
            });
        }
        out.extend(batch);
    }
    Ok(out)
}

/// Builds the benchmark file for `bundle`. Deterministic in `cfg.random_seed`
/// and the corpus.
pub fn build_benchmark(
    bundle: &IndexBundle,
    cfg: &BenchmarkConfig,
) -> Result<Benchmark, BenchError> {
    cfg.validate()?;
    let candidates = generate_candidates(bundle, cfg)?;
    let skill_sets: Vec<BTreeSet<SkillId>> = candidates.iter().map(|c| c.skills.clone()).collect();
    let splits = split_skill_disjoint(&skill_sets, cfg.split_sizes);
    let unseen = unseen_fraction(&skill_sets, &splits);

    let mut queries = Vec::new();
    let mut labels = Vec::new();
    let mut counts = BTreeMap::new();
    for (i, (c, split)) in candidates.into_iter().zip(splits).enumerate() {
        let query_id = format!("q{:03}", i + 1);
        *counts.entry(c.template).or_insert(0) += 1;
        labels.extend(c.positives.iter().map(|j| Label {
            query_id: query_id.clone(),
            job_id: j.clone(),
        }));
        queries.push(BenchQuery {
            query_id,
            text: c.text,
            template: c.template,
            split,
            skills: c.skills,
            source_job: c.source_job,
            slices: c.slices,
        });
    }
    labels.sort();
    let manifest = Manifest {
        config: cfg.clone(),
        corpus_fingerprint: bundle.fingerprint().to_string(),
        corpus_size: bundle.doc_count(),
        engine: bundle.config().clone(),
        query_counts: counts,
        silver_positive_pairs: labels.len(),
        silver_judged_pairs: queries.len() * bundle.doc_count(),
        unseen_test_skill_fraction: unseen,
        circularity_warning: CIRCULARITY_WARNING.to_string(),
    };
    Ok(Benchmark {
        queries,
        silver_labels: labels,
        manifest,
        gold_labels: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn posting(id: &str, skills: &[&str]) -> JobPosting {
        JobPosting {
            job_id: id.into(),
            required_skills: skills.iter().map(|s| SkillId::new(*s)).collect(),
            ..Default::default()
        }
    }

    fn ids(v: &[&str]) -> BTreeSet<SkillId> {
        v.iter().map(|s| SkillId::new(*s)).collect()
    }

    #[test]
    fn jaccard_threshold_is_strict() {
        let jobs = [
            posting("two-of-five", &["a", "b", "x", "y"]),
            posting(
                "exactly-tau",
                &["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"],
            ),
        ];
        let q = ids(&["a", "b", "c"]);
        assert!((jaccard(&q, &jobs[0].all_skills()) - 0.4).abs() < 1e-12);
        assert_eq!(jaccard(&q, &jobs[1].all_skills()), 0.3);
        let pos = silver_positives(&q, &jobs, 0.3);
        assert_eq!(pos, BTreeSet::from(["two-of-five".to_string()]));
    }

    #[test]
    fn empty_query_skills_have_no_positives() {
        let jobs = [posting("a", &["x"])];
        assert!(silver_positives(&BTreeSet::new(), &jobs, 0.3).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(BenchmarkConfig::default().validate().is_ok());
        let bad = BenchmarkConfig {
            silver_threshold: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = BenchmarkConfig {
            split_sizes: [10, 10, 9],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn shipped_templates_equal_defaults() {
        let t = QueryTemplates::from_toml_str(include_str!("../../../config/bench_templates.toml"))
            .unwrap();
        assert_eq!(t, QueryTemplates::default());
    }
}
