//! Explainable hybrid job matching.
//!
//! Postings are ingested once into three frozen indexes (BM25 inverted index,
//! dense vectors, typed skill graph). A query is enriched into skills, graph
//! expansions, an embedding and residual keywords; the three channels are
//! searched concurrently, merged with weighted reciprocal rank fusion, filtered
//! by hard eligibility constraints and reranked by a six-factor utility whose
//! every input is inspectable. Explanations are rendered only from the
//! pre-computed factor evidence and can be audited against it.

pub mod bundle;
pub mod config;
pub mod explain;
pub mod graph;
pub mod ingest;
pub mod lexical;
pub mod model;
pub mod pipeline;
pub mod rerank;
pub mod resume;
pub mod skills;
pub mod text;
pub mod vector;

pub use bundle::{build_indexes, IndexBundle};
pub use config::EngineConfig;
pub use model::{
    CandidateProfile, Channel, CompanyRef, ConstraintSet, Degree, JobPosting, Level, Location,
    RankedEntry, RankedList, SkillId,
};
pub use pipeline::{search, SearchOutcome, SearchRequest};
pub use rerank::{Factor, FactorScores, WeightVector};
