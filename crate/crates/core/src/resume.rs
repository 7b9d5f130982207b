//! Pattern-based resume parsing into a [`CandidateProfile`].
//!
//! Skills come only from whole-word vocabulary matches. Names use a positional
//! heuristic; optional `Label: value` lines fill preferences.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use crate::ingest::{first_years_mention, parse_degree, SeniorityRules};
use crate::model::{CandidateProfile, Level, Location, SkillId};
use crate::skills::SkillSynonymTable;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResumeError {
    #[error("resume text is empty")]
    EmptyInput,
}

fn name_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^[A-Z][A-Za-z'\-]*\.?(?:\s+[A-Z][A-Za-z'\-]*\.?){1,3}$").expect("valid regex")
    })
}

fn city_state_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"([A-Z][A-Za-z .'\-]+?),\s*([A-Z]{2})\b").expect("valid regex"))
}

fn money_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\$?\s*(\d{1,3}(?:,\d{3})+|\d+)(\s*[kK])?").expect("valid regex"))
}

/// First non-empty line shaped like a 2–4 token capitalized name, with no
/// `@` and no digits.
pub fn extract_name(text: &str) -> Option<String> {
    let line = text.lines().map(str::trim).find(|l| !l.is_empty())?;
    if line.contains('@') || line.chars().any(|c| c.is_ascii_digit()) {
        return None;
    }
    name_regex().is_match(line).then(|| line.to_string())
}

fn labeled<'a>(text: &'a str, labels: &[&str]) -> Option<&'a str> {
    text.lines().find_map(|line| {
        let (label, value) = line.split_once(':')?;
        let label = label.trim().to_lowercase();
        labels.contains(&label.as_str()).then(|| value.trim())
    })
}

fn parse_amount(value: &str) -> Option<f64> {
    let caps = money_regex().captures(value)?;
    let n: f64 = caps[1].replace(',', "").parse().ok()?;
    Some(if caps.get(2).is_some() { n * 1000.0 } else { n })
}

fn split_list(value: &str) -> BTreeSet<String> {
    value
        .split([',', ';'])
        .map(|s| s.trim().to_lowercase())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Parses resume text. `profile_id` is assigned by the caller.
pub fn parse_resume(
    profile_id: &str,
    text: &str,
    table: &SkillSynonymTable,
    rules: &SeniorityRules,
) -> Result<CandidateProfile, ResumeError> {
    if text.trim().is_empty() {
        return Err(ResumeError::EmptyInput);
    }
    let name = extract_name(text);
    let headline = labeled(text, &["title", "headline", "target role", "role"])
        .map(str::to_string)
        .or_else(|| {
            let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
            if name.is_some() {
                lines.next();
            }
            lines
                .next()
                .filter(|l| !l.contains('@') && !l.contains(':') && l.len() <= 80)
                .map(str::to_string)
        });

    let skills: BTreeSet<SkillId> = table
        .extract_mentions(text)
        .into_iter()
        .map(|m| m.skill)
        .collect();

    let education = text
        .lines()
        .filter_map(parse_degree)
        .max()
        .unwrap_or_default();

    let years = labeled(text, &["years of experience", "experience"])
        .and_then(first_years_mention)
        .or_else(|| first_years_mention(text));
    let experience_level = match headline.as_deref().map(|h| rules.classify(h, "")) {
        Some(level) if level != Level::Unknown => level,
        _ => rules.classify("", text),
    };

    let mut preferred_locations = Vec::new();
    if let Some(v) = labeled(
        text,
        &[
            "location",
            "locations",
            "preferred location",
            "preferred locations",
        ],
    ) {
        for caps in city_state_regex().captures_iter(v) {
            preferred_locations.push(Location::new(caps[1].trim(), &caps[2]));
        }
    }
    let remote_preference = labeled(text, &["remote", "work preference", "remote preference"])
        .map(|v| {
            let v = v.to_lowercase();
            v.contains("remote") || v.starts_with("yes") || v == "true"
        })
        .unwrap_or(false);

    let salary_expectation = labeled(
        text,
        &[
            "salary",
            "salary expectation",
            "expected salary",
            "desired salary",
        ],
    )
    .and_then(parse_amount);
    let preferred_industries = labeled(text, &["industries", "preferred industries", "industry"])
        .map(split_list)
        .unwrap_or_default();
    let preferred_company_sizes = labeled(
        text,
        &["company size", "company sizes", "preferred company size"],
    )
    .map(split_list)
    .unwrap_or_default();

    Ok(CandidateProfile {
        profile_id: profile_id.to_string(),
        name,
        headline,
        skills,
        experience_level,
        years_experience: years.map(f64::from),
        preferred_locations,
        remote_preference,
        salary_expectation,
        education,
        preferred_industries,
        preferred_company_sizes,
        hard_constraints: Default::default(),
    })
}
