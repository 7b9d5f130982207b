use std::path::PathBuf;

use jobmatch_core::explain::{audit_explanation, explain, Templates};
use jobmatch_core::ingest::{
    load_postings, CsvProfile, IngestOptions, SeniorityRules, SnapshotFormat,
};
use jobmatch_core::resume::{parse_resume, ResumeError};
use jobmatch_core::skills::{read_relations_path, SkillSynonymTable};
use jobmatch_core::{
    build_indexes, search, EngineConfig, Factor, IndexBundle, Level, SearchRequest, SkillId,
    WeightVector,
};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn vocabulary() -> (SkillSynonymTable, Vec<(SkillId, SkillId)>) {
    let table = SkillSynonymTable::from_csv_path(root().join("data/skills.csv")).unwrap();
    let relations = read_relations_path(root().join("data/related.csv")).unwrap();
    (table, relations)
}

fn nyc_bundle() -> IndexBundle {
    let (table, relations) = vocabulary();
    let profile = CsvProfile::load(root().join("config/nyc_profile.toml")).unwrap();
    let (postings, _) = load_postings(
        root().join("data/nyc_sample.csv"),
        SnapshotFormat::Csv,
        Some(&profile),
        &table,
        &IngestOptions::default(),
    )
    .unwrap();
    build_indexes(postings, table, relations, EngineConfig::default()).unwrap()
}

#[test]
fn nyc_sample_ingests_with_one_rejection() {
    let (table, _) = vocabulary();
    let profile = CsvProfile::load(root().join("config/nyc_profile.toml")).unwrap();
    let (postings, report) = load_postings(
        root().join("data/nyc_sample.csv"),
        SnapshotFormat::Csv,
        Some(&profile),
        &table,
        &IngestOptions::default(),
    )
    .unwrap();
    assert_eq!(report.input_rows, 10);
    assert_eq!(report.documents_loaded, 9);
    assert_eq!(report.documents_rejected, 1);
    assert_eq!(report.rejections[0].job_id.as_deref(), Some("501107"));
    assert_eq!(postings.len(), 9);
    assert!(postings
        .iter()
        .all(|p| p.location.state.as_deref() == Some("NY")));
    assert!(postings.iter().any(|p| !p.required_skills.is_empty()));
}

#[test]
fn resumes_parse_into_profiles() {
    let (table, _) = vocabulary();
    let rules = SeniorityRules::default();
    let text = std::fs::read_to_string(root().join("data/resumes/platform_engineer.txt")).unwrap();
    let p = parse_resume("p1", &text, &table, &rules).unwrap();
    assert_eq!(p.name.as_deref(), Some("Jane Doe"));
    assert!(p.skills.contains(&SkillId::new("kubernetes")));
    assert_ne!(p.experience_level, Level::Unknown);
    for name in ["data_analyst.txt", "frontend_developer.txt"] {
        let text = std::fs::read_to_string(root().join("data/resumes").join(name)).unwrap();
        let p = parse_resume("p", &text, &table, &rules).unwrap();
        assert!(!p.skills.is_empty(), "{name}");
    }
    assert_eq!(
        parse_resume("p", "  \n", &table, &rules),
        Err(ResumeError::EmptyInput)
    );
}

#[test]
fn query_search_ranks_and_explains() {
    let bundle = nyc_bundle();
    let out = search(
        &SearchRequest::text("data analyst with sql and tableau"),
        &bundle,
    )
    .unwrap();
    assert!(!out.ranking.entries.is_empty());
    assert_eq!(out.factors.len(), out.ranking.entries.len());
    let templates = Templates::default();
    for f in &out.factors {
        let (e, warning) = explain(f, &out.weights, &templates, None);
        assert!(warning.is_none());
        assert!(audit_explanation(&e, f, &out.weights, &templates.thresholds).all());
    }
}

#[test]
fn profile_search_from_resume() {
    let bundle = nyc_bundle();
    let text = std::fs::read_to_string(root().join("data/resumes/data_analyst.txt")).unwrap();
    let profile = parse_resume("p2", &text, bundle.synonyms(), &SeniorityRules::default()).unwrap();
    let req = SearchRequest {
        profile: Some(profile),
        page_size: 3,
        ..Default::default()
    };
    let out = search(&req, &bundle).unwrap();
    assert!(!out.ranking.entries.is_empty());
}

#[test]
fn reweighting_matches_a_fresh_search() {
    let bundle = nyc_bundle();
    let mut raw = bundle.config().rerank.default_weights.0;
    raw.set(Factor::Salary, 5.0);
    let mut cached = search(&SearchRequest::text("software engineer python"), &bundle).unwrap();
    cached.reweight(WeightVector::normalize(raw).unwrap());
    let fresh = search(
        &SearchRequest {
            weights: Some(raw),
            ..SearchRequest::text("software engineer python")
        },
        &bundle,
    )
    .unwrap();
    assert_eq!(cached.ranking, fresh.ranking);
    assert_eq!(cached.factors, fresh.factors);
}

#[test]
fn saved_bundle_reproduces_results() {
    let bundle = nyc_bundle();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bundle.json");
    bundle.save(&path).unwrap();
    let loaded = IndexBundle::load(&path).unwrap();
    assert_eq!(loaded.fingerprint(), bundle.fingerprint());
    let q = SearchRequest::text("cybersecurity analyst");
    let a = search(&q, &bundle).unwrap();
    let b = search(&q, &loaded).unwrap();
    assert_eq!(a.ranking, b.ranking);
    assert_eq!(a.factors, b.factors);
}
