use std::collections::BTreeSet;

use jobmatch_bench::benchmark::{BenchError, QueryTemplates, Template};
use jobmatch_bench::eval::{standard_grid, HYBRID_RERANKED};
use jobmatch_bench::splits::Split;
use jobmatch_bench::{
    build_benchmark, load_vocabulary, run_eval, synth, synthetic_bundle, workspace_root, Benchmark,
    BenchmarkConfig, SYNTHETIC_SEED, SYNTHETIC_SIZE,
};
use jobmatch_core::EngineConfig;

fn bundle() -> jobmatch_core::IndexBundle {
    synthetic_bundle(
        SYNTHETIC_SIZE,
        SYNTHETIC_SEED,
        &workspace_root().join("data"),
        EngineConfig::default(),
    )
}

#[test]
fn committed_corpus_matches_generator() {
    let root = workspace_root();
    let (table, _) = load_vocabulary(&root.join("data")).unwrap();
    let mut regenerated = Vec::new();
    synth::write_jsonl(
        &synth::generate_corpus(SYNTHETIC_SIZE, SYNTHETIC_SEED, &table),
        &mut regenerated,
    )
    .unwrap();
    let committed = std::fs::read(root.join("data/synthetic_500.jsonl")).unwrap();
    assert!(
        committed == regenerated,
        "data/synthetic_500.jsonl is stale"
    );
}

#[test]
fn shipped_templates_equal_defaults() {
    let t = QueryTemplates::load(workspace_root().join("config/bench_templates.toml")).unwrap();
    assert_eq!(t, QueryTemplates::default());
}

#[test]
fn benchmark_shape_and_round_trip() {
    let b = build_benchmark(&bundle(), &BenchmarkConfig::default()).unwrap();
    assert_eq!(b.queries.len(), 30);
    for t in Template::ALL {
        assert_eq!(b.manifest.query_counts[&t], 10);
    }
    for s in Split::ALL {
        assert_eq!(b.split_of(s).count(), 10);
    }
    let positives = b.positives();
    assert!(positives.values().all(|p| !p.is_empty()));
    assert_eq!(b.manifest.silver_positive_pairs, b.silver_labels.len());
    let ids: BTreeSet<&str> = b.queries.iter().map(|q| q.query_id.as_str()).collect();
    assert_eq!(ids.len(), 30);
    assert_eq!(b.label_source(), "silver");

    let back = Benchmark::from_json(&b.to_json().unwrap()).unwrap();
    assert_eq!(back, b);
}

#[test]
fn gold_labels_replace_silver() {
    let mut b = build_benchmark(&bundle(), &BenchmarkConfig::default()).unwrap();
    let first = b.silver_labels[0].clone();
    b.gold_labels = Some(vec![first.clone()]);
    assert_eq!(b.label_source(), "gold");
    let p = b.positives();
    assert_eq!(p[&first.query_id], BTreeSet::from([first.job_id]));
    assert!(p
        .iter()
        .filter(|(k, _)| **k != first.query_id)
        .all(|(_, v)| v.is_empty()));
}

#[test]
fn eval_is_deterministic_apart_from_latency() {
    let bundle = bundle();
    let b = build_benchmark(&bundle, &BenchmarkConfig::default()).unwrap();
    let a = run_eval(&bundle, &b, &standard_grid())
        .unwrap()
        .without_latency();
    let c = run_eval(&bundle, &b, &standard_grid())
        .unwrap()
        .without_latency();
    assert_eq!(a, c);
    assert_eq!(a.rows.len(), 7);
    assert!(a.circularity_warning.is_some());
    let table = a.render_table();
    assert!(table.contains("NDCG@10"));
    assert!(table.contains("labels: silver"));
    assert!(a.render_slices(HYBRID_RERANKED).contains("location:"));
}

#[test]
fn eval_refuses_a_different_corpus() {
    let b = build_benchmark(&bundle(), &BenchmarkConfig::default()).unwrap();
    let other = synthetic_bundle(
        120,
        9,
        &workspace_root().join("data"),
        EngineConfig::default(),
    );
    let err = run_eval(&other, &b, &[HYBRID_RERANKED]).unwrap_err();
    assert!(matches!(err, BenchError::CorpusFingerprintMismatch { .. }));
}

#[test]
fn invalid_configs_are_rejected() {
    let bundle = bundle();
    let bad_tau = BenchmarkConfig {
        silver_threshold: 1.0,
        ..Default::default()
    };
    assert!(matches!(
        build_benchmark(&bundle, &bad_tau),
        Err(BenchError::InvalidConfig(_))
    ));
    let bad_sizes = BenchmarkConfig {
        split_sizes: [10, 10, 5],
        ..Default::default()
    };
    assert!(matches!(
        build_benchmark(&bundle, &bad_sizes),
        Err(BenchError::InvalidConfig(_))
    ));
}

#[test]
fn tiny_corpus_reports_insufficient_queries() {
    let tiny = synthetic_bundle(
        6,
        3,
        &workspace_root().join("data"),
        EngineConfig::default(),
    );
    let err = build_benchmark(&tiny, &BenchmarkConfig::default()).unwrap_err();
    assert!(
        matches!(err, BenchError::InsufficientCorpus { .. }),
        "{err}"
    );
}
