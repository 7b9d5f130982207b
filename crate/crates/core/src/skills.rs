//! Synonym table mapping skill surface forms to canonical ids.
//!
//! The on-disk format is a two-column CSV `surface_form,canonical_id`. The
//! first surface form listed for a canonical id is its display name.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SkillId;
use crate::text::{match_tokens, normalize_phrase, PhraseMatcher};

#[derive(Debug, Error)]
pub enum SkillTableError {
    #[error("cannot read synonym table: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed synonym table: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: expected 2 columns")]
    BadRow { row: usize },
    #[error("invalid canonical id {0:?}: must be non-empty lowercase without whitespace")]
    InvalidCanonicalId(String),
    #[error("surface form {surface:?} maps to both {first} and {second}")]
    ConflictingSurfaceForm {
        surface: String,
        first: SkillId,
        second: SkillId,
    },
}

/// How unmapped surface forms are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    /// Unmapped forms become self-canonical ids.
    #[default]
    Lenient,
    /// Unmapped forms are reported as errors.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown skills: {0:?}")]
pub struct UnknownSkills(pub Vec<String>);

#[derive(Debug, Clone, PartialEq)]
pub struct SkillMention {
    pub skill: SkillId,
    /// Surface text as it appeared (normalized tokens joined by spaces).
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SynonymRows {
    rows: Vec<(String, SkillId)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SynonymRows", into = "SynonymRows")]
pub struct SkillSynonymTable {
    rows: Vec<(String, SkillId)>,
    forms: BTreeMap<String, SkillId>,
    canonical: BTreeSet<SkillId>,
    display: BTreeMap<SkillId, String>,
    matcher: PhraseMatcher<SkillId>,
}

impl TryFrom<SynonymRows> for SkillSynonymTable {
    type Error = SkillTableError;

    fn try_from(value: SynonymRows) -> Result<Self, Self::Error> {
        SkillSynonymTable::from_rows(value.rows)
    }
}

impl From<SkillSynonymTable> for SynonymRows {
    fn from(table: SkillSynonymTable) -> Self {
        SynonymRows { rows: table.rows }
    }
}

/// Turns free text into an id-shaped slug: `Machine Learning` -> `machine-learning`.
pub fn slugify(text: &str) -> String {
    normalize_phrase(text).replace(' ', "-")
}

fn valid_canonical(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(|c| c.is_whitespace() || c.is_uppercase())
}

impl SkillSynonymTable {
    pub fn empty() -> Self {
        SkillSynonymTable {
            rows: Vec::new(),
            forms: BTreeMap::new(),
            canonical: BTreeSet::new(),
            display: BTreeMap::new(),
            matcher: PhraseMatcher::new(),
        }
    }

    pub fn from_rows<I, S, C>(rows: I) -> Result<Self, SkillTableError>
    where
        I: IntoIterator<Item = (S, C)>,
        S: AsRef<str>,
        C: Into<SkillId>,
    {
        let mut table = SkillSynonymTable::empty();
        for (surface, canonical) in rows {
            table.insert(surface.as_ref(), canonical.into())?;
        }
        Ok(table)
    }

    fn claim(&mut self, surface: String, canonical: &SkillId) -> Result<(), SkillTableError> {
        // Distinct strings can still tokenize identically ("ci/cd" and "ci-cd").
        if let Some(existing) = self.matcher.get(&surface) {
            if existing != canonical {
                return Err(SkillTableError::ConflictingSurfaceForm {
                    surface,
                    first: existing.clone(),
                    second: canonical.clone(),
                });
            }
        }
        if let Some(existing) = self.forms.get(&surface) {
            if existing != canonical {
                return Err(SkillTableError::ConflictingSurfaceForm {
                    surface,
                    first: existing.clone(),
                    second: canonical.clone(),
                });
            }
            return Ok(());
        }
        self.matcher.insert(&surface, canonical.clone());
        self.forms.insert(surface, canonical.clone());
        Ok(())
    }

    fn insert(&mut self, surface: &str, canonical: SkillId) -> Result<(), SkillTableError> {
        let canonical_norm = SkillId::new(canonical.as_str().trim());
        if !valid_canonical(canonical_norm.as_str()) {
            return Err(SkillTableError::InvalidCanonicalId(
                canonical.as_str().to_string(),
            ));
        }
        let surface = normalize_phrase(surface);
        if surface.is_empty() {
            return Err(SkillTableError::BadRow {
                row: self.rows.len() + 1,
            });
        }
        // Every canonical id maps to itself.
        self.claim(canonical_norm.as_str().to_string(), &canonical_norm)?;
        self.claim(surface.clone(), &canonical_norm)?;
        self.display
            .entry(canonical_norm.clone())
            .or_insert_with(|| surface.clone());
        self.canonical.insert(canonical_norm.clone());
        self.rows.push((surface, canonical_norm));
        Ok(())
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, SkillTableError> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, record) in csv.records().enumerate() {
            let record = record?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            if record.len() != 2 {
                return Err(SkillTableError::BadRow { row: i + 1 });
            }
            if i == 0 && &record[0] == "surface_form" && &record[1] == "canonical_id" {
                continue;
            }
            rows.push((record[0].to_string(), SkillId::new(&record[1])));
        }
        SkillSynonymTable::from_rows(rows)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, SkillTableError> {
        let file = std::fs::File::open(path)?;
        SkillSynonymTable::from_csv_reader(file)
    }

    pub fn canonical_ids(&self) -> &BTreeSet<SkillId> {
        &self.canonical
    }

    pub fn is_canonical(&self, id: &SkillId) -> bool {
        self.canonical.contains(id)
    }

    /// All `(surface_form, canonical_id)` pairs, including canonical self-maps.
    pub fn surface_forms(&self) -> impl Iterator<Item = (&str, &SkillId)> {
        self.forms.iter().map(|(s, c)| (s.as_str(), c))
    }

    /// Human-readable name: the first surface form listed for the id.
    pub fn display_name<'a>(&'a self, id: &'a SkillId) -> &'a str {
        self.display
            .get(id)
            .map(String::as_str)
            .unwrap_or(id.as_str())
    }

    /// Maps one surface form through the table.
    pub fn lookup(&self, surface: &str) -> Option<&SkillId> {
        let norm = normalize_phrase(surface);
        self.forms
            .get(&norm)
            .or_else(|| self.forms.get(&slugify(&norm)))
    }

    /// Whole-word, longest-match skill mentions in free text.
    pub fn extract_mentions(&self, text: &str) -> Vec<SkillMention> {
        let tokens = match_tokens(text);
        self.mentions_in_tokens(&tokens)
    }

    pub fn mentions_in_tokens(&self, tokens: &[String]) -> Vec<SkillMention> {
        self.matcher
            .find_all(tokens)
            .into_iter()
            .map(|m| SkillMention {
                skill: m.value,
                surface: tokens[m.start..m.end].join(" "),
                start: m.start,
                end: m.end,
            })
            .collect()
    }

    pub fn matcher(&self) -> &PhraseMatcher<SkillId> {
        &self.matcher
    }
}

/// Canonicalizes raw skill strings: lowercase, trim, map through the table,
/// deduplicate. Unmapped forms are kept as slugs (lenient) or reported (strict).
pub fn normalize_skills<S: AsRef<str>>(
    raw: &[S],
    table: &SkillSynonymTable,
    strictness: Strictness,
) -> Result<BTreeSet<SkillId>, UnknownSkills> {
    let mut out = BTreeSet::new();
    let mut unknown = Vec::new();
    for form in raw {
        let form = form.as_ref();
        if normalize_phrase(form).is_empty() {
            continue;
        }
        match table.lookup(form) {
            Some(id) => {
                out.insert(id.clone());
            }
            None => match strictness {
                Strictness::Lenient => {
                    out.insert(SkillId::new(slugify(form)));
                }
                Strictness::Strict => unknown.push(normalize_phrase(form)),
            },
        }
    }
    if unknown.is_empty() {
        Ok(out)
    } else {
        unknown.sort();
        unknown.dedup();
        Err(UnknownSkills(unknown))
    }
}

/// Reads a two-column `skill_a,skill_b` CSV of related-skill pairs. The
/// header row and `#` comments are skipped.
pub fn read_relations<R: Read>(reader: R) -> Result<Vec<(SkillId, SkillId)>, SkillTableError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(SkillTableError::BadRow { row: i + 1 });
        }
        if i == 0 && &record[0] == "skill_a" && &record[1] == "skill_b" {
            continue;
        }
        out.push((SkillId::new(&record[0]), SkillId::new(&record[1])));
    }
    Ok(out)
}

pub fn read_relations_path(
    path: impl AsRef<Path>,
) -> Result<Vec<(SkillId, SkillId)>, SkillTableError> {
    read_relations(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table() -> SkillSynonymTable {
        SkillSynonymTable::from_rows([
            ("kubernetes", "kubernetes"),
            ("k8s", "kubernetes"),
            ("machine learning", "machine-learning"),
            ("ml", "machine-learning"),
            ("python", "python"),
        ])
        .unwrap()
    }

    fn set(ids: &[&str]) -> BTreeSet<SkillId> {
        ids.iter().map(|s| SkillId::from(*s)).collect()
    }

    #[test]
    fn synonyms_map_to_canonical() {
        let t = table();
        assert_eq!(
            normalize_skills(&["k8s"], &t, Strictness::Lenient).unwrap(),
            set(&["kubernetes"])
        );
        assert_eq!(
            normalize_skills(&["ML"], &t, Strictness::Lenient).unwrap(),
            set(&["machine-learning"])
        );
    }

    #[test]
    fn normalization_dedups() {
        let t = table();
        assert_eq!(
            normalize_skills(&["Python", "python "], &t, Strictness::Lenient).unwrap(),
            set(&["python"])
        );
    }

    #[test]
    fn unmapped_forms_depend_on_strictness() {
        let t = table();
        assert_eq!(
            normalize_skills(&["Rust Lang"], &t, Strictness::Lenient).unwrap(),
            set(&["rust-lang"])
        );
        assert_eq!(
            normalize_skills(&["Rust Lang", "k8s"], &t, Strictness::Strict),
            Err(UnknownSkills(vec!["rust lang".into()]))
        );
    }

    #[test]
    fn canonical_ids_map_to_themselves() {
        let t = table();
        for id in t.canonical_ids() {
            assert_eq!(t.lookup(id.as_str()), Some(id));
        }
        assert_eq!(
            t.display_name(&"machine-learning".into()),
            "machine learning"
        );
    }

    #[test]
    fn conflicting_surface_forms_are_rejected() {
        let err = SkillSynonymTable::from_rows([("go", "go"), ("go", "golang-tools")]).unwrap_err();
        assert!(matches!(
            err,
            SkillTableError::ConflictingSurfaceForm { .. }
        ));
    }

    #[test]
    fn csv_with_header_and_comments() {
        let csv = "surface_form,canonical_id\n# comment\nK8s,kubernetes\nkubernetes,kubernetes\n";
        let t = SkillSynonymTable::from_csv_reader(csv.as_bytes()).unwrap();
        assert_eq!(t.lookup("k8s"), Some(&SkillId::from("kubernetes")));
        assert_eq!(t.canonical_ids().len(), 1);
    }

    #[test]
    fn mentions_are_whole_word() {
        let t = table();
        let found: Vec<_> = t
            .extract_mentions("Deployed ML models on K8s; Pythonic code")
            .into_iter()
            .map(|m| m.skill)
            .collect();
        assert_eq!(
            found,
            vec!["machine-learning".into(), SkillId::from("kubernetes")]
        );
    }

    #[test]
    fn serde_round_trip_keeps_display_names() {
        let t = table();
        let json = serde_json::to_string(&t).unwrap();
        let back: SkillSynonymTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back.display_name(&"kubernetes".into()), "kubernetes");
        assert_eq!(back.lookup("k8s"), t.lookup("k8s"));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent_and_order_free(
            forms in proptest::collection::vec(prop_oneof![
                Just("k8s".to_string()), Just("ML".to_string()), Just(" Python".to_string()),
                "[a-z]{1,5}( [a-z]{1,4})?",
            ], 0..8)
        ) {
            let t = table();
            let once = normalize_skills(&forms, &t, Strictness::Lenient).unwrap();
            let ids: Vec<String> = once.iter().map(|s| s.as_str().to_string()).collect();
            let twice = normalize_skills(&ids, &t, Strictness::Lenient).unwrap();
            prop_assert_eq!(&once, &twice);
            let mut rev = forms.clone();
            rev.reverse();
            prop_assert_eq!(once, normalize_skills(&rev, &t, Strictness::Lenient).unwrap());
        }
    }

    #[test]
    fn relations_csv() {
        let rows = read_relations(
            "skill_a,skill_b\n# infra\nkubernetes,docker\n\npython,pandas\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(
            rows,
            vec![
                ("kubernetes".into(), "docker".into()),
                ("python".into(), "pandas".into())
            ]
        );
        assert!(read_relations("a,b,c\n".as_bytes()).is_err());
    }
}
