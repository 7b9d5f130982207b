//! The frozen index bundle: corpus, lexical index, vectors, skill graph and
//! entity gazetteer, built in one pass and shared read-only by queries.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::graph::{GraphReport, KnowledgeGraph};
use crate::lexical::{LexicalDoc, LexicalIndex, LexicalIndexBuilder};
use crate::model::{Degree, JobPosting, Location, SkillId};
use crate::skills::SkillSynonymTable;
use crate::text::PhraseMatcher;
use crate::vector::{build_embedder, EmbedError, Embedder, VectorIndex, VectorIndexBuilder};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("duplicate job_id {0}")]
    DuplicateJobId(String),
    #[error("embedding job {job_id}: {source}")]
    Embed { job_id: String, source: EmbedError },
    #[error("bundle file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("bundle encoding: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bundle format version {found} is not supported (expected {BUNDLE_FORMAT_VERSION})")]
    Version { found: u32 },
}

/// Something recognizable in query text besides skills.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum Entity {
    Location(Location),
    Company(String),
    Degree(Degree),
    Remote,
}

/// Known locations and companies harvested from the corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Gazetteer {
    pub cities: BTreeMap<String, Location>,
    pub companies: BTreeSet<String>,
}

impl Gazetteer {
    pub fn from_postings(postings: &[JobPosting]) -> Self {
        let mut g = Gazetteer::default();
        for p in postings {
            if let Some(city) = &p.location.city {
                g.cities
                    .entry(city.trim().to_lowercase())
                    .or_insert_with(|| Location {
                        city: Some(city.trim().to_string()),
                        state: p.location.state.clone(),
                        remote_allowed: false,
                    });
            }
            if !p.company.name.trim().is_empty() {
                g.companies.insert(p.company.name.trim().to_string());
            }
        }
        g
    }

    pub fn matcher(&self) -> PhraseMatcher<Entity> {
        let mut m = PhraseMatcher::new();
        for (name, loc) in &self.cities {
            m.insert(name, Entity::Location(loc.clone()));
        }
        for c in &self.companies {
            m.insert(c, Entity::Company(c.clone()));
        }
        for (term, degree) in [
            ("bachelor", Degree::Bachelor),
            ("bachelors", Degree::Bachelor),
            ("master", Degree::Master),
            ("masters", Degree::Master),
            ("phd", Degree::Doctorate),
            ("doctorate", Degree::Doctorate),
        ] {
            m.insert(term, Entity::Degree(degree));
        }
        m.insert("remote", Entity::Remote);
        m
    }
}

/// Hex SHA-256 over the canonical JSON of the postings sorted by job id.
pub fn corpus_fingerprint(postings: &[JobPosting]) -> String {
    let mut sorted: Vec<&JobPosting> = postings.iter().collect();
    sorted.sort_by(|a, b| a.job_id.cmp(&b.job_id));
    let mut hasher = Sha256::new();
    for p in sorted {
        hasher.update(serde_json::to_vec(p).expect("postings serialize"));
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

/// Text embedded per posting: title, skill names, description.
pub fn posting_embedding_text(p: &JobPosting, table: &SkillSynonymTable) -> String {
    let skills: Vec<&str> = p.all_skills_iter().map(|s| table.display_name(s)).collect();
    format!("{}\n{}\n{}", p.title, skills.join(", "), p.description)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BundleData {
    format_version: u32,
    config: EngineConfig,
    synonyms: SkillSynonymTable,
    relations: Vec<(SkillId, SkillId)>,
    postings: Vec<JobPosting>,
    fingerprint: String,
    lexical: LexicalIndex,
    vectors: VectorIndex,
    graph: KnowledgeGraph,
    graph_report: GraphReport,
    gazetteer: Gazetteer,
}

/// Immutable after construction; clone the `Arc` to share across threads.
#[derive(Clone)]
pub struct IndexBundle {
    data: Arc<BundleData>,
    by_id: Arc<HashMap<String, usize>>,
    embedder: Arc<dyn Embedder>,
    entity_matcher: Arc<PhraseMatcher<Entity>>,
}

impl std::fmt::Debug for IndexBundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IndexBundle")
            .field("documents", &self.data.postings.len())
            .field("fingerprint", &self.data.fingerprint)
            .finish()
    }
}

/// One pass over validated postings populating all three indexes.
pub fn build_indexes(
    postings: Vec<JobPosting>,
    synonyms: SkillSynonymTable,
    relations: Vec<(SkillId, SkillId)>,
    config: EngineConfig,
) -> Result<IndexBundle, BundleError> {
    let embedder: Arc<dyn Embedder> = Arc::from(build_embedder(&config.embedder));
    let mut seen = BTreeSet::new();
    let mut lexical = LexicalIndexBuilder::new();
    let mut vectors = VectorIndexBuilder::new();
    for p in &postings {
        if !seen.insert(p.job_id.as_str()) {
            return Err(BundleError::DuplicateJobId(p.job_id.clone()));
        }
        let skills: Vec<&str> = p.all_skills_iter().map(SkillId::as_str).collect();
        let skill_text = skills.join(" ");
        lexical.add(LexicalDoc {
            job_id: &p.job_id,
            title: &p.title,
            skills: &skill_text,
            description: &p.description,
        });
        let e = embedder
            .embed(&posting_embedding_text(p, &synonyms))
            .map_err(|source| BundleError::Embed {
                job_id: p.job_id.clone(),
                source,
            })?;
        vectors.add(&p.job_id, &e);
    }
    let (graph, graph_report) =
        KnowledgeGraph::build(&postings, [], &relations, synonyms.canonical_ids());
    let data = BundleData {
        format_version: BUNDLE_FORMAT_VERSION,
        fingerprint: corpus_fingerprint(&postings),
        gazetteer: Gazetteer::from_postings(&postings),
        lexical: lexical.freeze(),
        vectors: vectors.freeze(&config.knn),
        graph,
        graph_report,
        config,
        synonyms,
        relations,
        postings,
    };
    Ok(IndexBundle::from_data(data, Some(embedder)))
}

impl IndexBundle {
    fn from_data(data: BundleData, embedder: Option<Arc<dyn Embedder>>) -> Self {
        let by_id = data
            .postings
            .iter()
            .enumerate()
            .map(|(i, p)| (p.job_id.clone(), i))
            .collect();
        let embedder = embedder.unwrap_or_else(|| Arc::from(build_embedder(&data.config.embedder)));
        let entity_matcher = Arc::new(data.gazetteer.matcher());
        IndexBundle {
            data: Arc::new(data),
            by_id: Arc::new(by_id),
            embedder,
            entity_matcher,
        }
    }

    /// Builds an empty bundle with the given vocabulary.
    pub fn empty(
        synonyms: SkillSynonymTable,
        relations: Vec<(SkillId, SkillId)>,
        config: EngineConfig,
    ) -> Self {
        build_indexes(Vec::new(), synonyms, relations, config).expect("empty corpus always builds")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), BundleError> {
        let path = path.as_ref();
        let io = |source| BundleError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = File::create(path).map_err(io)?;
        serde_json::to_writer(BufWriter::new(file), &*self.data)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BundleError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| BundleError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let data: BundleData = serde_json::from_reader(BufReader::new(file))?;
        if data.format_version != BUNDLE_FORMAT_VERSION {
            return Err(BundleError::Version {
                found: data.format_version,
            });
        }
        Ok(IndexBundle::from_data(data, None))
    }

    /// Replaces the embedder used for queries (for example an external one).
    pub fn with_embedder(mut self, embedder: Arc<dyn Embedder>) -> Self {
        self.embedder = embedder;
        self
    }

    pub fn config(&self) -> &EngineConfig {
        &self.data.config
    }

    pub fn synonyms(&self) -> &SkillSynonymTable {
        &self.data.synonyms
    }

    pub fn relations(&self) -> &[(SkillId, SkillId)] {
        &self.data.relations
    }

    pub fn postings(&self) -> &[JobPosting] {
        &self.data.postings
    }

    pub fn position(&self, job_id: &str) -> Option<usize> {
        self.by_id.get(job_id).copied()
    }

    pub fn job(&self, job_id: &str) -> Option<&JobPosting> {
        self.position(job_id).map(|i| &self.data.postings[i])
    }

    pub fn job_embedding(&self, job_id: &str) -> Option<&[f64]> {
        self.position(job_id).map(|i| self.data.vectors.vector(i))
    }

    pub fn fingerprint(&self) -> &str {
        &self.data.fingerprint
    }

    pub fn lexical(&self) -> &LexicalIndex {
        &self.data.lexical
    }

    pub fn vectors(&self) -> &VectorIndex {
        &self.data.vectors
    }

    pub fn graph(&self) -> &KnowledgeGraph {
        &self.data.graph
    }

    pub fn graph_report(&self) -> &GraphReport {
        &self.data.graph_report
    }

    pub fn embedder(&self) -> &dyn Embedder {
        &*self.embedder
    }

    pub fn entity_matcher(&self) -> &PhraseMatcher<Entity> {
        &self.entity_matcher
    }

    pub fn doc_count(&self) -> usize {
        self.data.postings.len()
    }

    /// Document counts of the lexical, vector and graph indexes.
    pub fn index_counts(&self) -> (usize, usize, usize) {
        (
            self.data.lexical.doc_count(),
            self.data.vectors.doc_count(),
            self.data.graph.job_count(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::Embedding;

    fn table() -> SkillSynonymTable {
        SkillSynonymTable::from_rows([("python", "python"), ("sql", "sql")]).unwrap()
    }

    fn posting(id: &str, title: &str, skills: &[&str]) -> JobPosting {
        JobPosting {
            job_id: id.into(),
            title: title.into(),
            required_skills: skills.iter().map(|s| SkillId::new(*s)).collect(),
            location: Location::new("Brooklyn", "NY"),
            ..Default::default()
        }
    }

    #[test]
    fn empty_bundle_has_no_documents() {
        let b = IndexBundle::empty(table(), vec![], EngineConfig::default());
        assert_eq!(b.index_counts(), (0, 0, 0));
    }

    #[test]
    fn counts_agree_and_single_doc_is_reachable() {
        let b = build_indexes(
            vec![posting("j1", "Python Developer", &["python"])],
            table(),
            vec![],
            EngineConfig::default(),
        )
        .unwrap();
        assert_eq!(b.index_counts(), (1, 1, 1));
        let lex = b
            .lexical()
            .search(&["python".into()], None, 10, &b.config().bm25);
        assert_eq!(lex.ids().collect::<Vec<_>>(), ["j1"]);
        let e = b
            .embedder()
            .embed(&posting_embedding_text(b.job("j1").unwrap(), b.synonyms()))
            .unwrap();
        assert_eq!(
            b.vectors().knn_search(&e, 5).ids().collect::<Vec<_>>(),
            ["j1"]
        );
        assert!(b.graph().requires_skill("j1", &SkillId::new("python")));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = build_indexes(
            vec![posting("j1", "a", &[]), posting("j1", "b", &[])],
            table(),
            vec![],
            EngineConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, BundleError::DuplicateJobId(_)));
    }

    #[test]
    fn save_load_round_trip() {
        let b = build_indexes(
            vec![
                posting("j1", "Python Developer", &["python"]),
                posting("j2", "SQL Analyst", &["sql"]),
            ],
            table(),
            vec![],
            EngineConfig::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bundle.json");
        b.save(&path).unwrap();
        let back = IndexBundle::load(&path).unwrap();
        assert_eq!(back.fingerprint(), b.fingerprint());
        assert_eq!(back.postings(), b.postings());
        let q: Embedding = b.embedder().embed("sql analyst").unwrap();
        assert_eq!(
            back.vectors().knn_search(&q, 2),
            b.vectors().knn_search(&q, 2)
        );
    }

    #[test]
    fn fingerprint_ignores_order() {
        let a = posting("a", "x", &[]);
        let c = posting("c", "y", &[]);
        assert_eq!(
            corpus_fingerprint(&[a.clone(), c.clone()]),
            corpus_fingerprint(&[c, a])
        );
    }

    #[test]
    fn gazetteer_recognizes_cities() {
        let g = Gazetteer::from_postings(&[posting("a", "x", &[])]);
        let hits = g
            .matcher()
            .find_all(&crate::text::match_tokens("jobs in brooklyn remote"));
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[1].value, Entity::Remote);
    }
}
