//! Snapshot loading: native JSONL or mapped CSV, skill canonicalization,
//! rule-based seniority labels and per-row rejection accounting.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_posting, CompanyRef, Degree, JobPosting, Level, Location, SkillId};
use crate::skills::{normalize_skills, SkillSynonymTable, Strictness};
use crate::text::tokenize;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: String,
        source: std::io::Error,
    },
    #[error("mapped column {0:?} is missing from the CSV header")]
    SchemaMismatch(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("mapping profile: {0}")]
    Profile(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowRejection {
    /// 1-based data row (header excluded).
    pub row: usize,
    pub job_id: Option<String>,
    pub field: String,
    pub reason: String,
}

/// Counts for one ingestion run. Duplicate rows are counted both as rejected
/// and in `duplicate_ids_dropped`, so `loaded + rejected = input rows`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub input_rows: usize,
    pub documents_loaded: usize,
    pub documents_rejected: usize,
    pub rejections: Vec<RowRejection>,
    pub skills_canonicalized: usize,
    pub duplicate_ids_dropped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestOptions {
    pub strictness: Strictness,
    pub seniority: SeniorityRules,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            strictness: Strictness::Lenient,
            seniority: SeniorityRules::default(),
        }
    }
}

/// Keyword and years-of-experience rules for seniority labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeniorityRules {
    pub senior_keywords: Vec<String>,
    pub junior_keywords: Vec<String>,
    pub mid_keywords: Vec<String>,
    /// `N+ years` with `N >= senior_min_years` is senior.
    pub senior_min_years: u32,
    /// `mid_min_years <= N < senior_min_years` is mid; below is junior.
    pub mid_min_years: u32,
}

impl Default for SeniorityRules {
    fn default() -> Self {
        let words = |w: &[&str]| w.iter().map(|s| s.to_string()).collect();
        SeniorityRules {
            senior_keywords: words(&["senior", "sr", "lead", "principal", "staff", "head"]),
            junior_keywords: words(&["junior", "jr", "entry", "intern", "trainee", "graduate"]),
            mid_keywords: words(&["intermediate", "mid"]),
            senior_min_years: 5,
            mid_min_years: 2,
        }
    }
}

fn years_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(\d{1,2})\s*(?:\+|-\s*\d{1,2})?\s*(?:\+\s*)?(?:years?|yrs?)\b")
            .expect("valid regex")
    })
}

impl SeniorityRules {
    fn keyword_level(&self, title: &str) -> Option<Level> {
        let tokens = tokenize(title);
        let has = |list: &[String]| tokens.iter().any(|t| list.iter().any(|k| k == t));
        if has(&self.senior_keywords) {
            Some(Level::Senior)
        } else if has(&self.junior_keywords) {
            Some(Level::Junior)
        } else if has(&self.mid_keywords) {
            Some(Level::Mid)
        } else {
            None
        }
    }

    pub fn level_for_years(&self, years: u32) -> Level {
        if years >= self.senior_min_years {
            Level::Senior
        } else if years >= self.mid_min_years {
            Level::Mid
        } else {
            Level::Junior
        }
    }

    /// Title keywords first, then the first `N+ years` mention in `body`.
    pub fn classify(&self, title: &str, body: &str) -> Level {
        if let Some(level) = self.keyword_level(title) {
            return level;
        }
        match first_years_mention(body) {
            Some(n) => self.level_for_years(n),
            None => Level::Unknown,
        }
    }
}

/// The first `N years` / `N+ years` / `N-M years` figure in `text`.
pub fn first_years_mention(text: &str) -> Option<u32> {
    years_regex().captures(text).and_then(|c| c[1].parse().ok())
}

pub fn classify_seniority(posting: &JobPosting, rules: &SeniorityRules) -> Level {
    rules.classify(&posting.title, &posting.description)
}

/// Highest degree named in `text`, if any.
pub fn parse_degree(text: &str) -> Option<Degree> {
    let tokens = tokenize(&text.replace('.', ""));
    let has = |words: &[&str]| tokens.iter().any(|t| words.contains(&t.as_str()));
    if has(&["phd", "doctorate", "doctoral", "doctor"]) {
        Some(Degree::Doctorate)
    } else if has(&["master", "masters", "msc", "mba", "ms", "ma"]) {
        Some(Degree::Master)
    } else if has(&[
        "bachelor",
        "bachelors",
        "baccalaureate",
        "bsc",
        "bs",
        "ba",
        "undergraduate",
    ]) {
        Some(Degree::Bachelor)
    } else if has(&["none"]) {
        Some(Degree::None)
    } else {
        None
    }
}

struct Canonicalizer<'a> {
    table: &'a SkillSynonymTable,
    options: &'a IngestOptions,
}

impl Canonicalizer<'_> {
    /// Maps raw skill strings through the table; returns the ids and how many
    /// entries resolved to a table id.
    fn skills(&self, raw: &BTreeSet<SkillId>) -> Result<(BTreeSet<SkillId>, usize), String> {
        let forms: Vec<&str> = raw.iter().map(SkillId::as_str).collect();
        let mapped = forms
            .iter()
            .filter(|f| self.table.lookup(f).is_some())
            .count();
        normalize_skills(&forms, self.table, self.options.strictness)
            .map(|ids| (ids, mapped))
            .map_err(|e| e.to_string())
    }

    fn finish(
        &self,
        mut posting: JobPosting,
        report: &mut IngestReport,
    ) -> Result<JobPosting, (String, String)> {
        let (req, n1) = self
            .skills(&posting.required_skills)
            .map_err(|e| ("required_skills".into(), e))?;
        let (pref, n2) = self
            .skills(&posting.preferred_skills)
            .map_err(|e| ("preferred_skills".into(), e))?;
        report.skills_canonicalized += n1 + n2;
        posting.preferred_skills = pref.difference(&req).cloned().collect();
        posting.required_skills = req;
        if posting.seniority == Level::Unknown {
            posting.seniority = classify_seniority(&posting, &self.options.seniority);
        }
        let strict = match self.options.strictness {
            Strictness::Strict => Some(self.table.canonical_ids()),
            Strictness::Lenient => None,
        };
        validate_posting(posting, strict).map_err(|e| (e.field().to_string(), e.to_string()))
    }
}

fn accept(
    row: usize,
    result: Result<JobPosting, (Option<String>, String, String)>,
    seen: &mut HashSet<String>,
    out: &mut Vec<JobPosting>,
    report: &mut IngestReport,
) {
    report.input_rows += 1;
    match result {
        Ok(p) if !seen.insert(p.job_id.clone()) => {
            report.duplicate_ids_dropped += 1;
            report.documents_rejected += 1;
            report.rejections.push(RowRejection {
                row,
                job_id: Some(p.job_id),
                field: "job_id".into(),
                reason: "duplicate job_id".into(),
            });
        }
        Ok(p) => {
            report.documents_loaded += 1;
            out.push(p);
        }
        Err((job_id, field, reason)) => {
            report.documents_rejected += 1;
            report.rejections.push(RowRejection {
                row,
                job_id,
                field,
                reason,
            });
        }
    }
}

/// Reads one JobPosting per non-blank line.
pub fn load_jsonl<R: Read>(
    reader: R,
    table: &SkillSynonymTable,
    options: &IngestOptions,
) -> Result<(Vec<JobPosting>, IngestReport), IngestError> {
    let canon = Canonicalizer { table, options };
    let mut report = IngestReport::default();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut row = 0;
    for line in BufReader::new(reader).lines() {
        let line = line.map_err(|source| IngestError::UnreadableFile {
            path: "<jsonl stream>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        row += 1;
        let result = match serde_json::from_str::<JobPosting>(&line) {
            Ok(p) => {
                let id = p.job_id.clone();
                canon
                    .finish(p, &mut report)
                    .map_err(|(f, r)| (Some(id), f, r))
            }
            Err(e) => Err((None, "row".into(), e.to_string())),
        };
        accept(row, result, &mut seen, &mut out, &mut report);
    }
    Ok((out, report))
}

/// Column mapping for CSV snapshots. Text columns listed under skills are
/// scanned for vocabulary mentions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvProfile {
    pub job_id: String,
    pub title: String,
    pub description: Vec<String>,
    pub required_skill_text: Vec<String>,
    pub preferred_skill_text: Vec<String>,
    pub salary_min: Option<String>,
    pub salary_max: Option<String>,
    pub city: Option<String>,
    pub state: Option<String>,
    pub default_state: Option<String>,
    pub remote: Option<String>,
    pub company: Option<String>,
    pub industry: Option<String>,
    pub default_industry: Option<String>,
    pub company_size: Option<String>,
    pub default_company_size: Option<String>,
    pub seniority: Option<String>,
    pub degree: Option<String>,
    pub visa_sponsorship: Option<String>,
    pub certifications: Option<String>,
    /// Separator inside the certifications column.
    pub list_separator: Option<String>,
}

impl CsvProfile {
    pub fn from_toml_str(text: &str) -> Result<Self, IngestError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::UnreadableFile {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    fn columns(&self) -> Vec<&str> {
        let mut cols = vec![self.job_id.as_str(), self.title.as_str()];
        cols.extend(self.description.iter().map(String::as_str));
        cols.extend(self.required_skill_text.iter().map(String::as_str));
        cols.extend(self.preferred_skill_text.iter().map(String::as_str));
        for c in [
            &self.salary_min,
            &self.salary_max,
            &self.city,
            &self.state,
            &self.remote,
            &self.company,
            &self.industry,
            &self.company_size,
            &self.seniority,
            &self.degree,
            &self.visa_sponsorship,
            &self.certifications,
        ]
        .into_iter()
        .flatten()
        {
            cols.push(c);
        }
        cols
    }
}

fn parse_bool(s: &str) -> bool {
    matches!(s.trim().to_lowercase().as_str(), "y" | "yes" | "true" | "1")
}

fn parse_money(s: &str) -> Result<Option<f64>, String> {
    let cleaned: String = s
        .chars()
        .filter(|c| !matches!(c, '$' | ',' | ' '))
        .collect();
    if cleaned.is_empty() {
        return Ok(None);
    }
    cleaned
        .parse::<f64>()
        .map(Some)
        .map_err(|_| format!("not a number: {s:?}"))
}

/// Reads a CSV snapshot through `profile`.
pub fn load_csv<R: Read>(
    reader: R,
    profile: &CsvProfile,
    table: &SkillSynonymTable,
    options: &IngestOptions,
) -> Result<(Vec<JobPosting>, IngestReport), IngestError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    for col in profile.columns() {
        if !header.iter().any(|h| h == col) {
            return Err(IngestError::SchemaMismatch(col.to_string()));
        }
    }
    let idx = |col: &str| header.iter().position(|h| h == col).expect("checked above");
    let canon = Canonicalizer { table, options };
    let mut report = IngestReport::default();
    let mut out = Vec::new();
    let mut seen = HashSet::new();

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let get = |col: &str| record.get(idx(col)).unwrap_or("").trim().to_string();
        let opt = |col: &Option<String>| col.as_deref().map(get).filter(|v| !v.is_empty());
        let job_id = get(&profile.job_id);
        let mut build = || -> Result<JobPosting, (String, String)> {
            let skills_from = |cols: &[String]| -> BTreeSet<SkillId> {
                cols.iter()
                    .flat_map(|c| table.extract_mentions(&get(c)))
                    .map(|m| m.skill)
                    .collect()
            };
            let money = |col: &Option<String>, field: &str| match opt(col) {
                Some(v) => parse_money(&v).map_err(|e| (field.to_string(), e)),
                None => Ok(None),
            };
            let description = profile
                .description
                .iter()
                .map(|c| get(c))
                .filter(|t| !t.is_empty())
                .collect::<Vec<_>>()
                .join("\n");
            let sep = profile.list_separator.as_deref().unwrap_or(";");
            let posting = JobPosting {
                job_id: job_id.clone(),
                title: get(&profile.title),
                description,
                required_skills: skills_from(&profile.required_skill_text),
                preferred_skills: skills_from(&profile.preferred_skill_text),
                location: Location {
                    city: opt(&profile.city),
                    state: opt(&profile.state).or_else(|| profile.default_state.clone()),
                    remote_allowed: opt(&profile.remote).is_some_and(|v| parse_bool(&v)),
                },
                salary_min: money(&profile.salary_min, "salary_min")?,
                salary_max: money(&profile.salary_max, "salary_max")?,
                seniority: opt(&profile.seniority)
                    .and_then(|v| options.seniority.keyword_level(&v))
                    .unwrap_or(Level::Unknown),
                company: CompanyRef {
                    name: opt(&profile.company).unwrap_or_default(),
                    industry: opt(&profile.industry).or_else(|| profile.default_industry.clone()),
                    size: opt(&profile.company_size)
                        .or_else(|| profile.default_company_size.clone()),
                },
                degree_required: opt(&profile.degree)
                    .and_then(|v| parse_degree(&v))
                    .unwrap_or_default(),
                visa_sponsorship: opt(&profile.visa_sponsorship).is_some_and(|v| parse_bool(&v)),
                certifications_required: opt(&profile.certifications)
                    .map(|v| {
                        v.split(sep)
                            .map(|c| c.trim().to_string())
                            .filter(|c| !c.is_empty())
                            .collect()
                    })
                    .unwrap_or_default(),
            };
            canon.finish(posting, &mut report)
        };
        let result = build().map_err(|(f, r)| ((!job_id.is_empty()).then(|| job_id.clone()), f, r));
        accept(i + 1, result, &mut seen, &mut out, &mut report);
    }
    Ok((out, report))
}

/// Opens `path` and dispatches on `format`. CSV requires a mapping profile.
pub fn load_postings(
    path: impl AsRef<Path>,
    format: SnapshotFormat,
    csv_profile: Option<&CsvProfile>,
    table: &SkillSynonymTable,
    options: &IngestOptions,
) -> Result<(Vec<JobPosting>, IngestReport), IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::UnreadableFile {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        SnapshotFormat::Jsonl => load_jsonl(file, table, options),
        SnapshotFormat::Csv => {
            let default = CsvProfile::default();
            load_csv(file, csv_profile.unwrap_or(&default), table, options)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> SkillSynonymTable {
        SkillSynonymTable::from_rows([
            ("python", "python"),
            ("sql", "sql"),
            ("k8s", "kubernetes"),
            ("kubernetes", "kubernetes"),
        ])
        .unwrap()
    }

    #[test]
    fn jsonl_counts() {
        let data = r#"{"job_id":"a","title":"Dev","required_skills":["Python"]}
{"job_id":"b","title":"Ops","required_skills":["k8s"]}

{"job_id":"c","title":"Analyst"}
"#;
        let (jobs, report) =
            load_jsonl(data.as_bytes(), &table(), &IngestOptions::default()).unwrap();
        assert_eq!(jobs.len(), 3);
        assert_eq!(report.documents_rejected, 0);
        assert_eq!(report.skills_canonicalized, 2);
        assert!(jobs[1]
            .required_skills
            .contains(&SkillId::new("kubernetes")));
    }

    #[test]
    fn jsonl_duplicates_first_wins() {
        let data =
            "{\"job_id\":\"a\",\"title\":\"First\"}\n{\"job_id\":\"a\",\"title\":\"Second\"}\n";
        let (jobs, report) =
            load_jsonl(data.as_bytes(), &table(), &IngestOptions::default()).unwrap();
        assert_eq!(jobs.len(), 1);
        assert_eq!(jobs[0].title, "First");
        assert_eq!(report.duplicate_ids_dropped, 1);
        assert_eq!(
            report.documents_loaded + report.documents_rejected,
            report.input_rows
        );
    }

    #[test]
    fn jsonl_rejects_inverted_band_and_bad_rows() {
        let data = "{\"job_id\":\"a\",\"salary_min\":80000,\"salary_max\":60000}\nnot json\n";
        let (jobs, report) =
            load_jsonl(data.as_bytes(), &table(), &IngestOptions::default()).unwrap();
        assert!(jobs.is_empty());
        assert_eq!(report.documents_rejected, 2);
        assert_eq!(report.rejections[0].field, "salary_min");
    }

    #[test]
    fn strict_mode_rejects_unknown_skills() {
        let data = "{\"job_id\":\"a\",\"required_skills\":[\"cobol\"]}\n";
        let opts = IngestOptions {
            strictness: Strictness::Strict,
            ..Default::default()
        };
        let (jobs, report) = load_jsonl(data.as_bytes(), &table(), &opts).unwrap();
        assert!(jobs.is_empty());
        assert_eq!(report.documents_rejected, 1);
        let (jobs, _) = load_jsonl(data.as_bytes(), &table(), &IngestOptions::default()).unwrap();
        assert!(jobs[0].required_skills.contains(&SkillId::new("cobol")));
    }

    #[test]
    fn seniority_rules() {
        let r = SeniorityRules::default();
        assert_eq!(r.classify("Senior Data Engineer", ""), Level::Senior);
        assert_eq!(r.classify("Sr. Analyst", ""), Level::Senior);
        assert_eq!(r.classify("Junior Developer", "10+ years"), Level::Junior);
        assert_eq!(
            r.classify("Data Engineer", "requires 3+ years of experience"),
            Level::Mid
        );
        assert_eq!(
            r.classify("Data Engineer", "at least 7 years"),
            Level::Senior
        );
        assert_eq!(
            r.classify("Data Engineer", "1 year in a related role"),
            Level::Junior
        );
        assert_eq!(
            r.classify("Data Engineer", "no signals here"),
            Level::Unknown
        );
    }

    #[test]
    fn degree_mentions() {
        assert_eq!(
            parse_degree("Master's degree in planning"),
            Some(Degree::Master)
        );
        assert_eq!(parse_degree("Ph.D. preferred"), Some(Degree::Doctorate));
        assert_eq!(parse_degree("Bachelor of Science"), Some(Degree::Bachelor));
        assert_eq!(parse_degree("high school diploma"), None);
    }

    #[test]
    fn csv_mapping_and_schema_mismatch() {
        let profile = CsvProfile {
            job_id: "Job ID".into(),
            title: "Business Title".into(),
            description: vec!["Job Description".into()],
            required_skill_text: vec!["Preferred Skills".into()],
            salary_min: Some("Salary Range From".into()),
            salary_max: Some("Salary Range To".into()),
            city: Some("Work Location".into()),
            default_state: Some("NY".into()),
            ..Default::default()
        };
        let data = "Job ID,Business Title,Job Description,Preferred Skills,Salary Range From,Salary Range To,Work Location\n\
                    1,Analyst,Use SQL daily,Python and SQL,\"$60,000\",80000,New York\n\
                    2,Engineer,,k8s,90000,70000,Brooklyn\n";
        let (jobs, report) = load_csv(
            data.as_bytes(),
            &profile,
            &table(),
            &IngestOptions::default(),
        )
        .unwrap();
        assert_eq!(jobs.len(), 1);
        assert_eq!(report.documents_rejected, 1);
        assert_eq!(jobs[0].salary_min, Some(60_000.0));
        assert_eq!(jobs[0].location.state.as_deref(), Some("NY"));
        assert_eq!(jobs[0].required_skills.len(), 2);

        let bad = CsvProfile {
            title: "Nope".into(),
            ..profile
        };
        assert!(matches!(
            load_csv(data.as_bytes(), &bad, &table(), &IngestOptions::default()),
            Err(IngestError::SchemaMismatch(c)) if c == "Nope"
        ));
    }
}
