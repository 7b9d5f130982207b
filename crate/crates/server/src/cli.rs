//! The `jobmatch` command line: ingest, index, search, benchmark and serve.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use jobmatch_bench::benchmark::QueryTemplates;
use jobmatch_bench::eval::{full_grid, standard_grid, HYBRID_RERANKED};
use jobmatch_bench::{build_benchmark, run_eval, synth, BenchError, Benchmark, BenchmarkConfig};
use jobmatch_core::bundle::BundleError;
use jobmatch_core::config::ConfigError;
use jobmatch_core::explain::{TemplateError, Templates};
use jobmatch_core::ingest::{
    load_postings, CsvProfile, IngestError, IngestOptions, SnapshotFormat,
};
use jobmatch_core::rerank::FactorVector;
use jobmatch_core::resume::{parse_resume, ResumeError};
use jobmatch_core::skills::{read_relations_path, SkillSynonymTable, SkillTableError, Strictness};
use jobmatch_core::{
    build_indexes, CandidateProfile, EngineConfig, Factor, IndexBundle, SearchRequest,
};
use serde::Serialize;
use thiserror::Error;

use crate::api::{run_search, ApiError, SearchBody, SearchResponse};
use crate::routes::{router, AppState};
use crate::store::{ProfileStore, StoreError};

/// Built-in column mapping for the NYC Jobs export.
pub const NYC_PROFILE: &str = include_str!("../../../config/nyc_profile.toml");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("BundleMissing: {0}")]
    BundleMissing(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Skills(#[from] SkillTableError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Templates(#[from] TemplateError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Api(#[from] ApiError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Resume(#[from] ResumeError),
    #[error("{0} rows rejected in strict mode")]
    Rejected(usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::BundleMissing(_) => "BundleMissing",
            CliError::Ingest(_) | CliError::Rejected(_) => "Ingest",
            CliError::Skills(_) => "Skills",
            CliError::Config(_) | CliError::Toml(_) => "Config",
            CliError::Bundle(_) => "Bundle",
            CliError::Templates(_) => "Templates",
            CliError::Bench(_) => "Bench",
            CliError::Api(e) => e.code(),
            CliError::Store(_) => "Store",
            CliError::Resume(ResumeError::EmptyInput) => "EmptyInput",
            CliError::Io(_) => "Io",
            CliError::Json(_) => "Json",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "jobmatch", version, about = "Explainable hybrid job matching")]
pub struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Directory holding skills.csv, related.csv and the profile store.
    #[arg(long, global = true, env = "JOBMATCH_DATA_DIR", default_value = "data")]
    pub data_dir: PathBuf,
    /// Engine constants (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Explanation templates (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    pub templates: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceProfile {
    /// Canonical postings, one JSON object per line.
    Jsonl,
    /// NYC Jobs CSV export.
    Nyc,
    /// CSV with a custom column mapping given by `--mapping`.
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Grid {
    Standard,
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and normalize a snapshot, reporting rejected rows.
    Ingest {
        snapshot: PathBuf,
        #[arg(long, value_enum, default_value = "jsonl")]
        profile: SourceProfile,
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Reject postings with skills outside the vocabulary.
        #[arg(long)]
        strict: bool,
        /// Write normalized postings as JSONL.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and freeze the index bundle for a snapshot.
    Index {
        snapshot: PathBuf,
        #[arg(long, value_enum, default_value = "jsonl")]
        profile: SourceProfile,
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank postings for a query or a profile.
    Search {
        query: Option<String>,
        #[arg(long, env = "JOBMATCH_BUNDLE")]
        bundle: Option<PathBuf>,
        /// Resume text or profile JSON.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Raw factor weights, e.g. `skill=7,salary=3`; unnamed factors are zero.
        #[arg(long, value_parser = parse_weights)]
        weights: Option<FactorVector>,
        #[arg(long, default_value_t = 10)]
        page_size: usize,
    },
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "JOBMATCH_BUNDLE")]
        bundle: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Generate a synthetic corpus as JSONL.
    Synth {
        #[arg(long, default_value_t = jobmatch_bench::SYNTHETIC_SIZE)]
        size: usize,
        #[arg(long, default_value_t = jobmatch_bench::SYNTHETIC_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a benchmark (queries, silver labels, splits) over a bundle.
    Build {
        #[arg(long, env = "JOBMATCH_BUNDLE")]
        bundle: Option<PathBuf>,
        /// Benchmark settings (TOML); defaults when omitted.
        #[arg(long)]
        settings: Option<PathBuf>,
        /// Natural-language query templates (TOML).
        #[arg(long)]
        query_templates: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a configuration grid on a benchmark.
    Run {
        #[arg(long, env = "JOBMATCH_BUNDLE")]
        bundle: Option<PathBuf>,
        #[arg(long)]
        benchmark: PathBuf,
        #[arg(long, value_enum, default_value = "standard")]
        grid: Grid,
        /// Zero all latencies so repeated runs compare equal.
        #[arg(long)]
        omit_latency: bool,
        /// Also write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `k=v[,k=v...]` into raw factor weights.
pub fn parse_weights(s: &str) -> Result<FactorVector, String> {
    let mut w = FactorVector::default();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("expected factor=value, got {part:?}"))?;
        let f = Factor::ALL
            .into_iter()
            .find(|f| f.as_str() == k.trim())
            .ok_or_else(|| format!("unknown factor {k:?}"))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| format!("weight for {k} is not a number"))?;
        w.set(f, v);
    }
    Ok(w)
}

fn engine_config(cli: &Cli) -> Result<EngineConfig, CliError> {
    Ok(match &cli.config {
        Some(p) => EngineConfig::load(p)?,
        None => EngineConfig::default(),
    })
}

fn templates(cli: &Cli) -> Result<Templates, CliError> {
    Ok(match &cli.templates {
        Some(p) => Templates::load(p)?,
        None => Templates::default(),
    })
}

fn vocabulary(
    data_dir: &Path,
) -> Result<
    (
        SkillSynonymTable,
        Vec<(jobmatch_core::SkillId, jobmatch_core::SkillId)>,
    ),
    CliError,
> {
    let table = SkillSynonymTable::from_csv_path(data_dir.join("skills.csv"))?;
    let relations = read_relations_path(data_dir.join("related.csv"))?;
    Ok((table, relations))
}

fn load_snapshot(
    snapshot: &Path,
    profile: SourceProfile,
    mapping: Option<&Path>,
    table: &SkillSynonymTable,
    options: &IngestOptions,
) -> Result<
    (
        Vec<jobmatch_core::JobPosting>,
        jobmatch_core::ingest::IngestReport,
    ),
    CliError,
> {
    let mapping = match (profile, mapping) {
        (SourceProfile::Jsonl, _) => None,
        (_, Some(p)) => Some(CsvProfile::load(p)?),
        (SourceProfile::Nyc, None) => Some(CsvProfile::from_toml_str(NYC_PROFILE)?),
        (SourceProfile::Csv, None) => Some(CsvProfile::default()),
    };
    let format = if profile == SourceProfile::Jsonl {
        SnapshotFormat::Jsonl
    } else {
        SnapshotFormat::Csv
    };
    Ok(load_postings(
        snapshot,
        format,
        mapping.as_ref(),
        table,
        options,
    )?)
}

fn require_bundle(path: Option<&Path>) -> Result<IndexBundle, CliError> {
    let path =
        path.ok_or_else(|| CliError::BundleMissing("pass --bundle or set JOBMATCH_BUNDLE".into()))?;
    if !path.is_file() {
        return Err(CliError::BundleMissing(format!(
            "{} does not exist",
            path.display()
        )));
    }
    Ok(IndexBundle::load(path)?)
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Reads `--profile`: profile JSON if it parses as one, otherwise resume text.
pub fn read_profile(path: &Path, bundle: &IndexBundle) -> Result<CandidateProfile, CliError> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(p) = serde_json::from_str::<CandidateProfile>(&text) {
        return Ok(p);
    }
    let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("cli");
    Ok(parse_resume(
        id,
        &text,
        bundle.synonyms(),
        &bundle.config().seniority,
    )?)
}

/// Plain-text ranking with one column per factor.
pub fn render_results(response: &SearchResponse) -> String {
    let mut s = format!(
        "{:>4} {:>6}  {:<12} {:<34}{}\n",
        "rank",
        "match",
        "job",
        "title",
        Factor::ALL.map(|f| format!("{:>11}", f.as_str())).join("")
    );
    for r in &response.results {
        let title: String = r.job.title.chars().take(33).collect();
        let phi = Factor::ALL
            .map(|f| format!("{:>11.2}", r.factors.phi.get(f)))
            .join("");
        s.push_str(&format!(
            "{:>4} {:>5}%  {:<12} {:<34}{}\n",
            r.rank, r.match_percentage, r.job.job_id, title, phi
        ));
    }
    let w = response.diagnostics.weights;
    s.push_str(&format!(
        "weights: {}\n",
        Factor::ALL
            .map(|f| format!("{}={:.3}", f.as_str(), w.get(f)))
            .join(" ")
    ));
    for warning in &response.diagnostics.warnings {
        s.push_str(&format!("warning: {warning}\n"));
    }
    s
}

/// Runs one command, writing its output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Ingest {
            snapshot,
            profile,
            mapping,
            strict,
            out: dest,
        } => {
            let (table, _) = vocabulary(&cli.data_dir)?;
            let options = IngestOptions {
                strictness: if *strict {
                    Strictness::Strict
                } else {
                    Strictness::Lenient
                },
                seniority: engine_config(&cli)?.seniority,
            };
            let (postings, report) =
                load_snapshot(snapshot, *profile, mapping.as_deref(), &table, &options)?;
            if let Some(dest) = dest {
                let mut f = std::io::BufWriter::new(std::fs::File::create(dest)?);
                synth::write_jsonl(&postings, &mut f)?;
                f.flush()?;
            }
            if cli.json {
                print_json(out, &report)?;
            } else {
                writeln!(
                    out,
                    "{} rows: {} loaded, {} rejected ({} duplicate ids), {} skills canonicalized",
                    report.input_rows,
                    report.documents_loaded,
                    report.documents_rejected,
                    report.duplicate_ids_dropped,
                    report.skills_canonicalized
                )?;
                for r in &report.rejections {
                    writeln!(
                        out,
                        "  row {} {:?} {}: {}",
                        r.row,
                        r.job_id.as_deref().unwrap_or("-"),
                        r.field,
                        r.reason
                    )?;
                }
            }
            if *strict && report.documents_rejected > 0 {
                return Err(CliError::Rejected(report.documents_rejected));
            }
        }
        Command::Index {
            snapshot,
            profile,
            mapping,
            out: dest,
        } => {
            let config = engine_config(&cli)?;
            let (table, relations) = vocabulary(&cli.data_dir)?;
            let options = IngestOptions {
                seniority: config.seniority.clone(),
                ..Default::default()
            };
            let (postings, report) =
                load_snapshot(snapshot, *profile, mapping.as_deref(), &table, &options)?;
            let bundle = build_indexes(postings, table, relations, config)?;
            bundle.save(dest)?;
            #[derive(Serialize)]
            struct IndexSummary<'a> {
                bundle: String,
                fingerprint: &'a str,
                documents: usize,
                rejected: usize,
            }
            let summary = IndexSummary {
                bundle: dest.display().to_string(),
                fingerprint: bundle.fingerprint(),
                documents: bundle.doc_count(),
                rejected: report.documents_rejected,
            };
            if cli.json {
                print_json(out, &summary)?;
            } else {
                writeln!(
                    out,
                    "indexed {} postings ({} rejected) into {}, corpus {}",
                    summary.documents, summary.rejected, summary.bundle, summary.fingerprint
                )?;
            }
        }
        Command::Search {
            query,
            bundle,
            profile,
            weights,
            page_size,
        } => {
            let bundle = require_bundle(bundle.as_deref())?;
            let profile = profile
                .as_deref()
                .map(|p| read_profile(p, &bundle))
                .transpose()?;
            let body = SearchBody {
                profile_id: None,
                request: SearchRequest {
                    query: query.clone(),
                    profile,
                    weights: *weights,
                    page_size: *page_size,
                    ..Default::default()
                },
            };
            let response = run_search(&bundle, &templates(&cli)?, None, None, body)?;
            if cli.json {
                print_json(out, &response)?;
            } else {
                write!(out, "{}", render_results(&response))?;
            }
        }
        Command::Bench(cmd) => run_bench(&cli, cmd, out)?,
        Command::Serve { bundle, host, port } => {
            let path = bundle.clone().ok_or_else(|| {
                CliError::BundleMissing("pass --bundle or set JOBMATCH_BUNDLE".into())
            })?;
            if !path.is_file() {
                return Err(CliError::BundleMissing(format!(
                    "{} does not exist",
                    path.display()
                )));
            }
            let store = ProfileStore::open(cli.data_dir.join("profiles"))?;
            let state = AppState::new(store, templates(&cli)?);
            serve(state, path, host, *port, cli.json, out)?;
        }
    }
    Ok(())
}

fn run_bench(cli: &Cli, cmd: &BenchCommand, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        BenchCommand::Synth {
            size,
            seed,
            out: dest,
        } => {
            let (table, _) = vocabulary(&cli.data_dir)?;
            let corpus = synth::generate_corpus(*size, *seed, &table);
            let mut f = std::io::BufWriter::new(std::fs::File::create(dest)?);
            synth::write_jsonl(&corpus, &mut f)?;
            f.flush()?;
            if cli.json {
                print_json(
                    out,
                    &serde_json::json!({ "postings": corpus.len(), "seed": seed, "out": dest }),
                )?;
            } else {
                writeln!(
                    out,
                    "wrote {} postings (seed {seed}) to {}",
                    corpus.len(),
                    dest.display()
                )?;
            }
        }
        BenchCommand::Build {
            bundle,
            settings,
            query_templates,
            out: dest,
        } => {
            let bundle = require_bundle(bundle.as_deref())?;
            let mut cfg = match settings {
                Some(p) => toml::from_str::<BenchmarkConfig>(&std::fs::read_to_string(p)?)?,
                None => BenchmarkConfig::default(),
            };
            if let Some(p) = query_templates {
                cfg.templates = QueryTemplates::load(p)?;
            }
            let benchmark = build_benchmark(&bundle, &cfg)?;
            benchmark.save(dest)?;
            if cli.json {
                print_json(out, &benchmark.manifest)?;
            } else {
                let m = &benchmark.manifest;
                writeln!(
                    out,
                    "{} queries, {} positive of {} judged pairs, unseen test-skill fraction {:.3}, written to {}",
                    benchmark.queries.len(),
                    m.silver_positive_pairs,
                    m.silver_judged_pairs,
                    m.unseen_test_skill_fraction,
                    dest.display()
                )?;
                writeln!(out, "warning: {}", m.circularity_warning)?;
            }
        }
        BenchCommand::Run {
            bundle,
            benchmark,
            grid,
            omit_latency,
            out: dest,
        } => {
            let bundle = require_bundle(bundle.as_deref())?;
            let benchmark = Benchmark::load(benchmark)?;
            let configs = match grid {
                Grid::Standard => standard_grid(),
                Grid::Full => full_grid(),
            };
            let mut report = run_eval(&bundle, &benchmark, &configs)?;
            if *omit_latency {
                report = report.without_latency();
            }
            if let Some(dest) = dest {
                let mut s = serde_json::to_string_pretty(&report)?;
                s.push('\n');
                std::fs::write(dest, s)?;
            }
            if cli.json {
                print_json(out, &report)?;
            } else {
                write!(out, "{}", report.render_table())?;
                write!(out, "{}", report.render_slices(HYBRID_RERANKED))?;
            }
        }
    }
    Ok(())
}

/// Binds first so health checks answer while the bundle loads; bundle
/// routes return 503 until it is installed.
fn serve(
    state: AppState,
    bundle: PathBuf,
    host: &str,
    port: u16,
    json: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await?;
        let addr = listener.local_addr()?;
        if json {
            print_json(out, &serde_json::json!({ "listening": addr.to_string() }))?;
        } else {
            writeln!(out, "listening on http://{addr}")?;
        }
        out.flush()?;
        let app = router(state.clone());
        let server = tokio::spawn(async move {
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
        });
        let loaded = tokio::task::spawn_blocking(move || IndexBundle::load(&bundle))
            .await
            .map_err(|e| std::io::Error::other(e.to_string()))??;
        tracing::info!(
            documents = loaded.doc_count(),
            fingerprint = loaded.fingerprint(),
            "bundle ready"
        );
        state.install_bundle(loaded);
        server
            .await
            .map_err(|e| std::io::Error::other(e.to_string()))??;
        Ok(())
    })
}
