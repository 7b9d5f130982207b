//! Text embeddings and nearest-neighbour search over 384-dimensional unit vectors.
//!
//! The default embedder feature-hashes word unigrams and character n-grams
//! with signed hashing; it is deterministic given its seed. An HTTP embedder
//! can be plugged in instead. Search is exact by default; an HNSW graph can be
//! enabled through [`KnnConfig`].

mod hnsw;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hnsw::Hnsw;

use crate::model::{Channel, RankedList};
use crate::text::tokenize;

pub const EMBEDDING_DIM: usize = 384;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("external embedder unavailable: {0}")]
    ExternalEmbedderUnavailable(String),
    #[error("embedding has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding contains non-finite values")]
    NonFinite,
}

/// A unit-norm vector of [`EMBEDDING_DIM`] reals.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding(Vec<f64>);

impl fmt::Debug for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Embedding([{:.4}, {:.4}, ..])", self.0[0], self.0[1])
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = EmbedError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Embedding::from_raw(v)
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

impl Embedding {
    /// Dimension-checks and L2-normalizes `raw`. An all-zero vector becomes
    /// [`Embedding::fallback`].
    pub fn from_raw(mut raw: Vec<f64>) -> Result<Self, EmbedError> {
        if raw.len() != EMBEDDING_DIM {
            return Err(EmbedError::DimensionMismatch {
                expected: EMBEDDING_DIM,
                got: raw.len(),
            });
        }
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(Embedding::fallback());
        }
        for x in &mut raw {
            *x /= norm;
        }
        Ok(Embedding(raw))
    }

    /// The fixed unit vector used for texts without any features.
    pub fn fallback() -> Self {
        Embedding(vec![1.0 / (EMBEDDING_DIM as f64).sqrt(); EMBEDDING_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Dot product; equals cosine similarity for unit vectors.
    pub fn dot(&self, other: &Embedding) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EmbedderSpec {
    Hashed {
        seed: u64,
        ngram_min: usize,
        ngram_max: usize,
    },
    External {
        endpoint: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

fn default_timeout_ms() -> u64 {
    2_000
}

impl Default for EmbedderSpec {
    fn default() -> Self {
        EmbedderSpec::Hashed {
            seed: 17,
            ngram_min: 3,
            ngram_max: 5,
        }
    }
}

pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Embedding, EmbedError>;
}

pub fn build_embedder(spec: &EmbedderSpec) -> Box<dyn Embedder> {
    match spec {
        EmbedderSpec::Hashed {
            seed,
            ngram_min,
            ngram_max,
        } => Box::new(HashedEmbedder::new(*seed, *ngram_min, *ngram_max)),
        EmbedderSpec::External {
            endpoint,
            timeout_ms,
        } => Box::new(ExternalEmbedder::new(
            endpoint.clone(),
            Duration::from_millis(*timeout_ms),
        )),
    }
}

/// Signed feature hashing of word unigrams and boundary-marked character
/// n-grams into [`EMBEDDING_DIM`] buckets.
#[derive(Debug, Clone)]
pub struct HashedEmbedder {
    seed: u64,
    ngram_min: usize,
    ngram_max: usize,
}

const UNIGRAM_WEIGHT: f64 = 1.0;
const NGRAM_WEIGHT: f64 = 0.5;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl HashedEmbedder {
    pub fn new(seed: u64, ngram_min: usize, ngram_max: usize) -> Self {
        let ngram_min = ngram_min.max(1);
        HashedEmbedder {
            seed,
            ngram_min,
            ngram_max: ngram_max.max(ngram_min),
        }
    }

    fn add_feature(&self, v: &mut [f64], kind: u8, feature: &str, weight: f64) {
        let mut bytes = Vec::with_capacity(feature.len() + 1);
        bytes.push(kind);
        bytes.extend_from_slice(feature.as_bytes());
        let h = mix(fnv1a(self.seed, &bytes));
        let bucket = (h % EMBEDDING_DIM as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[bucket] += sign * weight;
    }

    fn raw_vector(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; EMBEDDING_DIM];
        for token in tokenize(text) {
            self.add_feature(&mut v, b'w', &token, UNIGRAM_WEIGHT);
            let marked: Vec<char> = format!("<{token}>").chars().collect();
            for n in self.ngram_min..=self.ngram_max {
                if marked.len() < n {
                    break;
                }
                for window in marked.windows(n) {
                    let gram: String = window.iter().collect();
                    self.add_feature(&mut v, b'c', &gram, NGRAM_WEIGHT);
                }
            }
        }
        v
    }
}

impl Embedder for HashedEmbedder {
    fn embed(&self, text: &str) -> Result<Embedding, EmbedError> {
        Embedding::from_raw(self.raw_vector(text))
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

/// Delegates to a local HTTP endpoint: `POST {text}` -> `{vector: [384 reals]}`.
pub struct ExternalEmbedder {
    endpoint: String,
    agent: ureq::Agent,
}

impl ExternalEmbedder {
    pub fn new(endpoint: String, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        ExternalEmbedder { endpoint, agent }
    }
}

impl Embedder for ExternalEmbedder {
    fn embed(&self, text: &str) -> Result<Embedding, EmbedError> {
        let unavailable = |e: ureq::Error| EmbedError::ExternalEmbedderUnavailable(e.to_string());
        let response: EmbedResponse = self
            .agent
            .post(&self.endpoint)
            .send_json(EmbedRequest { text })
            .map_err(unavailable)?
            .body_mut()
            .read_json()
            .map_err(unavailable)?;
        Embedding::from_raw(response.vector)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnMode {
    #[default]
    Exact,
    Hnsw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnConfig {
    pub mode: KnnMode,
    pub m: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    pub seed: u64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            mode: KnnMode::Exact,
            m: 16,
            ef_construction: 200,
            ef_search: 128,
            seed: 7,
        }
    }
}

#[derive(Debug, Default)]
pub struct VectorIndexBuilder {
    doc_ids: Vec<String>,
    vectors: Vec<f64>,
}

impl VectorIndexBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, job_id: &str, embedding: &Embedding) -> u32 {
        self.doc_ids.push(job_id.to_string());
        self.vectors.extend_from_slice(embedding.as_slice());
        (self.doc_ids.len() - 1) as u32
    }

    pub fn freeze(self, cfg: &KnnConfig) -> VectorIndex {
        let ann = match cfg.mode {
            KnnMode::Exact => None,
            KnnMode::Hnsw => Some(Hnsw::build(&self.vectors, EMBEDDING_DIM, cfg)),
        };
        VectorIndex {
            doc_ids: self.doc_ids,
            vectors: self.vectors,
            ann,
            ef_search: cfg.ef_search,
        }
    }
}

/// Frozen vector store.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorIndex {
    doc_ids: Vec<String>,
    vectors: Vec<f64>,
    #[serde(default)]
    ann: Option<Hnsw>,
    #[serde(default)]
    ef_search: usize,
}

impl VectorIndex {
    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn vector(&self, doc: usize) -> &[f64] {
        &self.vectors[doc * EMBEDDING_DIM..(doc + 1) * EMBEDDING_DIM]
    }

    pub fn doc_position(&self, job_id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|d| d == job_id)
    }

    pub fn is_approximate(&self) -> bool {
        self.ann.is_some()
    }

    /// Top-`k` by cosine similarity, using the HNSW graph when one was built.
    pub fn knn_search(&self, query: &Embedding, k: usize) -> RankedList {
        match &self.ann {
            Some(graph) => {
                let ef = self.ef_search.max(k);
                let hits = graph.search(&self.vectors, EMBEDDING_DIM, query.as_slice(), k, ef);
                RankedList::from_scores(
                    Channel::Semantic,
                    hits.into_iter()
                        .map(|(d, s)| (self.doc_ids[d as usize].clone(), s)),
                    k,
                )
            }
            None => self.exact_search(query, k),
        }
    }

    /// Brute-force scan over every stored vector.
    pub fn exact_search(&self, query: &Embedding, k: usize) -> RankedList {
        RankedList::from_scores(
            Channel::Semantic,
            (0..self.doc_count()).map(|d| {
                (
                    self.doc_ids[d].clone(),
                    dot(self.vector(d), query.as_slice()),
                )
            }),
            k,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn embedder() -> HashedEmbedder {
        HashedEmbedder::new(17, 3, 5)
    }

    fn unit(components: &[(usize, f64)]) -> Embedding {
        let mut v = vec![0.0; EMBEDDING_DIM];
        for &(i, x) in components {
            v[i] = x;
        }
        Embedding::from_raw(v).unwrap()
    }

    #[test]
    fn embedding_is_deterministic_and_unit() {
        let e = embedder();
        let a = e.embed("python backend developer").unwrap();
        let b = e.embed("python backend developer").unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-6);
        assert!((a.dot(&b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shared_ngrams_raise_similarity() {
        let e = embedder();
        let dev = e.embed("python backend developer").unwrap();
        let eng = e.embed("python backend engineer").unwrap();
        let chef = e.embed("pastry chef").unwrap();
        assert!(dev.dot(&eng) > dev.dot(&chef));
    }

    #[test]
    fn empty_text_maps_to_fallback() {
        let e = embedder();
        assert_eq!(e.embed("").unwrap(), Embedding::fallback());
        assert_eq!(e.embed("  --  ").unwrap(), Embedding::fallback());
        assert!((Embedding::fallback().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn raw_vectors_are_dimension_checked() {
        assert!(matches!(
            Embedding::from_raw(vec![1.0; 3]),
            Err(EmbedError::DimensionMismatch { got: 3, .. })
        ));
        assert!(serde_json::from_str::<Embedding>("[1.0, 2.0]").is_err());
    }

    #[test]
    fn identical_query_ranks_document_first() {
        let e = embedder();
        let mut b = VectorIndexBuilder::new();
        for (id, text) in [
            ("a", "data analyst sql"),
            ("b", "python developer"),
            ("c", "civil engineer"),
        ] {
            b.add(id, &e.embed(text).unwrap());
        }
        let idx = b.freeze(&KnnConfig::default());
        let list = idx.knn_search(&e.embed("python developer").unwrap(), 3);
        assert_eq!(list.entries[0].job_id, "b");
        assert!((list.entries[0].score - 1.0).abs() < 1e-9);
        assert!(list.is_well_formed());
    }

    #[test]
    fn empty_index_returns_nothing() {
        let idx = VectorIndexBuilder::new().freeze(&KnnConfig::default());
        assert!(idx.knn_search(&Embedding::fallback(), 5).is_empty());
    }

    #[test]
    fn hand_placed_vectors_match_cosine_oracle() {
        let docs = [
            ("d1", unit(&[(0, 1.0)])),
            ("d2", unit(&[(0, 1.0), (1, 1.0)])),
            ("d3", unit(&[(1, 1.0)])),
            ("d4", unit(&[(0, -1.0)])),
            ("d5", unit(&[(0, 2.0), (1, 1.0), (2, 1.0)])),
        ];
        let mut b = VectorIndexBuilder::new();
        for (id, v) in &docs {
            b.add(id, v);
        }
        let idx = b.freeze(&KnnConfig::default());
        let q = unit(&[(0, 3.0), (1, 1.0)]);

        // Oracle: cosine from raw components, computed independently of the index.
        let cos = |a: &[f64], b: &[f64]| {
            let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            d / (na * nb)
        };
        let mut oracle: Vec<(&str, f64)> = docs
            .iter()
            .map(|(id, v)| (*id, cos(v.as_slice(), q.as_slice())))
            .collect();
        oracle.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));

        let list = idx.knn_search(&q, 5);
        let got: Vec<&str> = list.ids().collect();
        let want: Vec<&str> = oracle.iter().map(|(id, _)| *id).collect();
        assert_eq!(got, want);
        for (entry, (_, s)) in list.entries.iter().zip(&oracle) {
            assert!((entry.score - s).abs() < 1e-12);
            assert!((-1.0..=1.0).contains(&entry.score));
        }
    }
}
