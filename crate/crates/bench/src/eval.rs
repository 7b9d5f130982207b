//! Ablation runs over a benchmark: per-configuration metrics, split and
//! slice breakdowns, and end-to-end latency.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Instant;

use jobmatch_core::pipeline::{search, ChannelSet};
use jobmatch_core::{IndexBundle, SearchRequest};
use serde::{Deserialize, Serialize};

use crate::benchmark::{BenchError, Benchmark};
use crate::metrics::{has_relevant, mean, ndcg_at_k, percentile, recall_at_k, reciprocal_rank};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfiguration {
    pub channels: ChannelSet,
    pub rerank: bool,
}

impl EvalConfiguration {
    pub const fn new(lexical: bool, semantic: bool, graph: bool, rerank: bool) -> Self {
        EvalConfiguration {
            channels: ChannelSet {
                lexical,
                semantic,
                graph,
            },
            rerank,
        }
    }

    pub fn label(&self) -> String {
        let mut l = self.channels.label();
        if self.rerank {
            l.push_str("+R");
        }
        l
    }
}

pub const BM25_ONLY: EvalConfiguration = EvalConfiguration::new(true, false, false, false);
pub const KG_ONLY: EvalConfiguration = EvalConfiguration::new(false, false, true, false);
pub const HYBRID_RERANKED: EvalConfiguration = EvalConfiguration::new(true, true, true, true);

/// Each single channel, lexical paired with each other channel, all three, and all three reranked.
pub fn standard_grid() -> Vec<EvalConfiguration> {
    vec![
        BM25_ONLY,
        EvalConfiguration::new(false, true, false, false),
        KG_ONLY,
        EvalConfiguration::new(true, true, false, false),
        EvalConfiguration::new(true, false, true, false),
        EvalConfiguration::new(true, true, true, false),
        HYBRID_RERANKED,
    ]
}

/// Every non-empty channel subset, with and without the reranker.
pub fn full_grid() -> Vec<EvalConfiguration> {
    let mut out = Vec::new();
    for mask in 1u8..8 {
        for rerank in [false, true] {
            out.push(EvalConfiguration::new(
                mask & 1 != 0,
                mask & 2 != 0,
                mask & 4 != 0,
                rerank,
            ));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub ndcg_at_5: f64,
    pub ndcg_at_10: f64,
    pub recall_at_50: f64,
    pub recall_at_100: f64,
    pub mrr: f64,
    pub queries: usize,
    /// Queries without any relevant document (scored 0).
    pub flagged: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Latency {
    pub p50_ms: f64,
    pub p95_ms: f64,
}

/// Per-query outcome for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub query_id: String,
    pub ndcg_at_5: f64,
    pub ndcg_at_10: f64,
    pub recall_at_50: f64,
    pub recall_at_100: f64,
    pub reciprocal_rank: f64,
    pub relevant: usize,
    /// Positives among the first 100 fused results, before filtering.
    pub retrieved_relevant: usize,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigReport {
    pub label: String,
    pub configuration: EvalConfiguration,
    pub metrics: Metrics,
    pub latency: Latency,
    pub per_split: BTreeMap<String, Metrics>,
    /// Keyed `dimension:slice`.
    pub per_slice: BTreeMap<String, Metrics>,
    pub per_query: Vec<QueryResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub corpus_fingerprint: String,
    pub label_source: String,
    pub circularity_warning: Option<String>,
    pub rows: Vec<ConfigReport>,
}

fn aggregate<'a>(results: impl IntoIterator<Item = &'a QueryResult>) -> Metrics {
    let results: Vec<&QueryResult> = results.into_iter().collect();
    let col = |f: fn(&QueryResult) -> f64| mean(&results.iter().map(|r| f(r)).collect::<Vec<_>>());
    Metrics {
        ndcg_at_5: col(|r| r.ndcg_at_5),
        ndcg_at_10: col(|r| r.ndcg_at_10),
        recall_at_50: col(|r| r.recall_at_50),
        recall_at_100: col(|r| r.recall_at_100),
        mrr: col(|r| r.reciprocal_rank),
        queries: results.len(),
        flagged: results.iter().filter(|r| r.relevant == 0).count(),
    }
}

/// Runs one query. NDCG and MRR use the final ranking; recall uses the fused
/// list before hard-constraint filtering.
pub fn evaluate_query(
    bundle: &IndexBundle,
    query_id: &str,
    text: &str,
    positives: &BTreeSet<String>,
    config: EvalConfiguration,
) -> Result<QueryResult, BenchError> {
    let req = SearchRequest {
        channels: config.channels,
        rerank: config.rerank,
        ..SearchRequest::text(text)
    };
    let start = Instant::now();
    let outcome = search(&req, bundle)?;
    let latency_ms = start.elapsed().as_secs_f64() * 1000.0;
    let ranking: Vec<&str> = outcome.ranking.ids().collect();
    let fused: Vec<&str> = outcome.fused.ids().collect();
    let relevant = if has_relevant(positives) {
        positives.len()
    } else {
        0
    };
    Ok(QueryResult {
        query_id: query_id.to_string(),
        ndcg_at_5: ndcg_at_k(&ranking, positives, 5),
        ndcg_at_10: ndcg_at_k(&ranking, positives, 10),
        recall_at_50: recall_at_k(&fused, positives, 50),
        recall_at_100: recall_at_k(&fused, positives, 100),
        reciprocal_rank: reciprocal_rank(&ranking, positives),
        relevant,
        retrieved_relevant: fused
            .iter()
            .take(100)
            .filter(|id| positives.contains(**id))
            .count(),
        latency_ms,
    })
}

/// Evaluates every configuration on every benchmark query, serially.
pub fn run_eval(
    bundle: &IndexBundle,
    benchmark: &Benchmark,
    configs: &[EvalConfiguration],
) -> Result<EvalReport, BenchError> {
    benchmark.check_corpus(bundle)?;
    let positives = benchmark.positives();
    let empty = BTreeSet::new();
    let mut rows = Vec::new();
    for &config in configs {
        let mut per_query = Vec::new();
        for q in &benchmark.queries {
            let p = positives.get(&q.query_id).unwrap_or(&empty);
            per_query.push(evaluate_query(bundle, &q.query_id, &q.text, p, config)?);
        }
        let latencies: Vec<f64> = per_query.iter().map(|r| r.latency_ms).collect();
        let mut per_split = BTreeMap::new();
        let mut per_slice: BTreeMap<String, Vec<&QueryResult>> = BTreeMap::new();
        for split in crate::splits::Split::ALL {
            let ids: BTreeSet<&str> = benchmark
                .split_of(split)
                .map(|q| q.query_id.as_str())
                .collect();
            per_split.insert(
                split.as_str().to_string(),
                aggregate(
                    per_query
                        .iter()
                        .filter(|r| ids.contains(r.query_id.as_str())),
                ),
            );
        }
        for (q, r) in benchmark.queries.iter().zip(&per_query) {
            for (dim, slice) in q.slices.pairs() {
                per_slice
                    .entry(format!("{dim}:{slice}"))
                    .or_default()
                    .push(r);
            }
        }
        rows.push(ConfigReport {
            label: config.label(),
            configuration: config,
            metrics: aggregate(&per_query),
            latency: Latency {
                p50_ms: percentile(&latencies, 50.0),
                p95_ms: percentile(&latencies, 95.0),
            },
            per_split,
            per_slice: per_slice
                .into_iter()
                .map(|(k, v)| (k, aggregate(v)))
                .collect(),
            per_query,
        });
    }
    Ok(EvalReport {
        corpus_fingerprint: bundle.fingerprint().to_string(),
        label_source: benchmark.label_source().to_string(),
        circularity_warning: (benchmark.gold_labels.is_none())
            .then(|| benchmark.manifest.circularity_warning.clone()),
        rows,
    })
}

impl EvalReport {
    /// Copy with every latency zeroed, for determinism comparisons.
    pub fn without_latency(&self) -> EvalReport {
        let mut r = self.clone();
        for row in &mut r.rows {
            row.latency = Latency::default();
            for q in &mut row.per_query {
                q.latency_ms = 0.0;
            }
        }
        r
    }

    pub fn row(&self, config: EvalConfiguration) -> Option<&ConfigReport> {
        self.rows.iter().find(|r| r.configuration == config)
    }

    /// Plain-text table: channel marks, ranking metrics, latency.
    pub fn render_table(&self) -> String {
        let mark = |b: bool| if b { "x" } else { "-" };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<5}{:<5}{:<5}{:<4}{:>9}{:>9}{:>8}{:>8}{:>8}{:>10}{:>10}",
            "BM25",
            "Sem",
            "KG",
            "R",
            "NDCG@5",
            "NDCG@10",
            "R@50",
            "R@100",
            "MRR",
            "P50 ms",
            "P95 ms"
        );
        for row in &self.rows {
            let c = row.configuration;
            let m = row.metrics;
            let _ = writeln!(
                out,
                "{:<5}{:<5}{:<5}{:<4}{:>9.3}{:>9.3}{:>8.2}{:>8.2}{:>8.3}{:>10.1}{:>10.1}",
                mark(c.channels.lexical),
                mark(c.channels.semantic),
                mark(c.channels.graph),
                mark(c.rerank),
                m.ndcg_at_5,
                m.ndcg_at_10,
                m.recall_at_50,
                m.recall_at_100,
                m.mrr,
                row.latency.p50_ms,
                row.latency.p95_ms
            );
        }
        let _ = writeln!(out, "labels: {}", self.label_source);
        if let Some(w) = &self.circularity_warning {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }

    /// Slice table for one configuration.
    pub fn render_slices(&self, config: EvalConfiguration) -> String {
        let mut out = String::new();
        if let Some(row) = self.row(config) {
            let _ = writeln!(
                out,
                "{:<24}{:>8}{:>10}{:>8}",
                "slice", "queries", "NDCG@10", "R@100"
            );
            for (k, m) in row.per_slice.iter().chain(row.per_split.iter()) {
                let _ = writeln!(
                    out,
                    "{:<24}{:>8}{:>10.3}{:>8.2}",
                    k, m.queries, m.ndcg_at_10, m.recall_at_100
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_labels() {
        let labels: Vec<String> = standard_grid()
            .iter()
            .map(EvalConfiguration::label)
            .collect();
        assert_eq!(labels.first().map(String::as_str), Some("BM25"));
        assert_eq!(labels.last().map(String::as_str), Some("BM25+Sem+KG+R"));
        assert_eq!(full_grid().len(), 14);
    }

    #[test]
    fn aggregate_counts_flagged() {
        let r = |id: &str, relevant| QueryResult {
            query_id: id.into(),
            ndcg_at_5: 1.0,
            ndcg_at_10: 1.0,
            recall_at_50: 1.0,
            recall_at_100: 1.0,
            reciprocal_rank: 1.0,
            relevant,
            retrieved_relevant: relevant,
            latency_ms: 1.0,
        };
        let m = aggregate(&[r("a", 2), r("b", 0)]);
        assert_eq!(m.queries, 2);
        assert_eq!(m.flagged, 1);
    }
}
