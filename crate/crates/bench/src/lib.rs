//! Benchmark builder and evaluation harness.
//!
//! Generates title, natural-language and skill-synonym queries from a
//! frozen corpus, labels them by expanded skill overlap, partitions them
//! into skill-disjoint splits and scores any channel/reranker configuration.

pub mod benchmark;
pub mod eval;
pub mod metrics;
pub mod splits;
pub mod synth;

use std::path::{Path, PathBuf};

use jobmatch_core::skills::{read_relations_path, SkillSynonymTable, SkillTableError};
use jobmatch_core::{build_indexes, EngineConfig, IndexBundle, SkillId};

pub use benchmark::{build_benchmark, BenchError, Benchmark, BenchmarkConfig};
pub use eval::{run_eval, EvalConfiguration, EvalReport};

/// Seed of the committed 500-posting corpus.
pub const SYNTHETIC_SEED: u64 = 42;
pub const SYNTHETIC_SIZE: usize = 500;
/// Corpus size used for latency checks.
pub const LATENCY_CORPUS_SIZE: usize = 1283;

/// Repository root, resolved at compile time.
pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// `skills.csv` and `related.csv` from `data_dir`.
pub fn load_vocabulary(
    data_dir: &Path,
) -> Result<(SkillSynonymTable, Vec<(SkillId, SkillId)>), SkillTableError> {
    let table = SkillSynonymTable::from_csv_path(data_dir.join("skills.csv"))?;
    let relations = read_relations_path(data_dir.join("related.csv"))?;
    Ok((table, relations))
}

/// Index bundle over a freshly generated synthetic corpus.
pub fn synthetic_bundle(
    size: usize,
    seed: u64,
    data_dir: &Path,
    config: EngineConfig,
) -> IndexBundle {
    let (table, relations) = load_vocabulary(data_dir).expect("bundled vocabulary loads");
    let corpus = synth::generate_corpus(size, seed, &table);
    build_indexes(corpus, table, relations, config).expect("synthetic corpus indexes")
}
