//! Binary-relevance ranking metrics.
//!
//! DCG uses a `log2(i + 1)` discount with 1-based ranks. A query with no
//! relevant documents scores 0 on every metric; callers flag it via
//! [`has_relevant`].

use std::collections::BTreeSet;

pub fn has_relevant(positives: &BTreeSet<String>) -> bool {
    !positives.is_empty()
}

fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

pub fn dcg_at_k<S: AsRef<str>>(ranking: &[S], positives: &BTreeSet<String>, k: usize) -> f64 {
    ranking
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, id)| positives.contains(id.as_ref()))
        .fold(0.0, |acc, (i, _)| acc + discount(i + 1))
}

pub fn ndcg_at_k<S: AsRef<str>>(ranking: &[S], positives: &BTreeSet<String>, k: usize) -> f64 {
    assert!(k > 0, "k must be positive");
    let ideal: f64 = (1..=positives.len().min(k)).map(discount).sum();
    if ideal == 0.0 {
        return 0.0;
    }
    dcg_at_k(ranking, positives, k) / ideal
}

pub fn recall_at_k<S: AsRef<str>>(ranking: &[S], positives: &BTreeSet<String>, k: usize) -> f64 {
    assert!(k > 0, "k must be positive");
    if positives.is_empty() {
        return 0.0;
    }
    let hits = ranking
        .iter()
        .take(k)
        .filter(|id| positives.contains(id.as_ref()))
        .count();
    hits as f64 / positives.len() as f64
}

pub fn reciprocal_rank<S: AsRef<str>>(ranking: &[S], positives: &BTreeSet<String>) -> f64 {
    ranking
        .iter()
        .position(|id| positives.contains(id.as_ref()))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// Mean reciprocal rank over `(ranking, positives)` pairs.
pub fn mrr<S: AsRef<str>>(runs: &[(Vec<S>, BTreeSet<String>)]) -> f64 {
    if runs.is_empty() {
        return 0.0;
    }
    runs.iter().map(|(r, p)| reciprocal_rank(r, p)).sum::<f64>() / runs.len() as f64
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Nearest-rank percentile of `values` (`p` in `[0, 100]`).
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}
