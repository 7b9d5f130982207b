//! Field-boosted BM25 over an embedded inverted index.
//!
//! Each field (title, skills, description) keeps its own postings, document
//! lengths and document frequencies. A document's score is
//! `Σ_field boost_field · Σ_term idf_field(term) · tf_norm(term, doc, field)`.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Channel, RankedList};
use crate::text::{tokenize, tokenize_description};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Title,
    Skills,
    Description,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::Title, Field::Skills, Field::Description];

    fn slot(self) -> usize {
        self as usize
    }

    /// Description text drops stop words; other fields keep every token.
    pub fn tokenize(self, text: &str) -> Vec<String> {
        match self {
            Field::Description => tokenize_description(text),
            Field::Title | Field::Skills => tokenize(text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldBoosts {
    pub title: f64,
    pub skills: f64,
    pub description: f64,
}

impl Default for FieldBoosts {
    fn default() -> Self {
        FieldBoosts {
            title: 3.0,
            skills: 2.0,
            description: 1.0,
        }
    }
}

impl FieldBoosts {
    pub fn get(&self, field: Field) -> f64 {
        match field {
            Field::Title => self.title,
            Field::Skills => self.skills,
            Field::Description => self.description,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Config {
    pub k1: f64,
    pub b: f64,
    pub field_boosts: FieldBoosts,
}

impl Default for Bm25Config {
    fn default() -> Self {
        Bm25Config {
            k1: 1.2,
            b: 0.75,
            field_boosts: FieldBoosts::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Bm25ConfigError {
    #[error("k1 must be >= 0 (got {0})")]
    K1(f64),
    #[error("b must lie in [0, 1] (got {0})")]
    B(f64),
    #[error("field boost for {0:?} must be > 0")]
    Boost(Field),
}

impl Bm25Config {
    pub fn validate(&self) -> Result<(), Bm25ConfigError> {
        if self.k1.is_nan() || self.k1 < 0.0 {
            return Err(Bm25ConfigError::K1(self.k1));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Bm25ConfigError::B(self.b));
        }
        for field in Field::ALL {
            let boost = self.field_boosts.get(field);
            if boost.is_nan() || boost <= 0.0 {
                return Err(Bm25ConfigError::Boost(field));
            }
        }
        Ok(())
    }
}

/// Robertson-Sparck Jones IDF with the `+1` smoothing, floored at zero.
pub fn idf(doc_count: usize, doc_freq: usize) -> f64 {
    let n = doc_count as f64;
    let df = doc_freq as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln().max(0.0)
}

/// Saturated, length-normalized term frequency.
pub fn tf_norm(tf: f64, doc_len: f64, avg_len: f64, k1: f64, b: f64) -> f64 {
    let ratio = if avg_len > 0.0 {
        doc_len / avg_len
    } else {
        0.0
    };
    tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * ratio))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct FieldIndex {
    postings: BTreeMap<String, Vec<Posting>>,
    lengths: Vec<u32>,
    avg_len: f64,
}

impl FieldIndex {
    fn add(&mut self, doc: u32, tokens: &[String]) {
        let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
        for t in tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        for (term, tf) in counts {
            self.postings
                .entry(term.to_string())
                .or_default()
                .push(Posting { doc, tf });
        }
        self.lengths.push(tokens.len() as u32);
    }

    fn finish(&mut self) {
        let total: u64 = self.lengths.iter().map(|&l| l as u64).sum();
        self.avg_len = if self.lengths.is_empty() {
            0.0
        } else {
            total as f64 / self.lengths.len() as f64
        };
    }
}

/// Text of one document, split by field.
#[derive(Debug, Clone, Copy)]
pub struct LexicalDoc<'a> {
    pub job_id: &'a str,
    pub title: &'a str,
    pub skills: &'a str,
    pub description: &'a str,
}

/// Single-writer build phase; [`LexicalIndexBuilder::freeze`] yields the
/// read-only [`LexicalIndex`].
#[derive(Debug, Default)]
pub struct LexicalIndexBuilder {
    fields: [FieldIndex; 3],
    doc_ids: Vec<String>,
}

impl LexicalIndexBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, doc: LexicalDoc<'_>) -> u32 {
        let id = self.doc_ids.len() as u32;
        for (field, text) in [
            (Field::Title, doc.title),
            (Field::Skills, doc.skills),
            (Field::Description, doc.description),
        ] {
            self.fields[field.slot()].add(id, &field.tokenize(text));
        }
        self.doc_ids.push(doc.job_id.to_string());
        id
    }

    pub fn freeze(mut self) -> LexicalIndex {
        for f in &mut self.fields {
            f.finish();
        }
        LexicalIndex {
            fields: self.fields,
            doc_ids: self.doc_ids,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LexicalIndex {
    fields: [FieldIndex; 3],
    doc_ids: Vec<String>,
}

impl LexicalIndex {
    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_id(&self, doc: u32) -> &str {
        &self.doc_ids[doc as usize]
    }

    pub fn avg_len(&self, field: Field) -> f64 {
        self.fields[field.slot()].avg_len
    }

    pub fn doc_len(&self, field: Field, doc: u32) -> u32 {
        self.fields[field.slot()].lengths[doc as usize]
    }

    pub fn doc_freq(&self, field: Field, term: &str) -> usize {
        self.fields[field.slot()]
            .postings
            .get(term)
            .map_or(0, Vec::len)
    }

    /// Whether `term` occurs in any field of any document.
    pub fn contains_term(&self, term: &str) -> bool {
        self.fields.iter().any(|f| f.postings.contains_key(term))
    }

    /// Top-`k` documents by boosted BM25. Query terms are deduplicated;
    /// documents rejected by `allow` are never scored; zero scores are dropped.
    pub fn search(
        &self,
        query_terms: &[String],
        allow: Option<&dyn Fn(u32) -> bool>,
        k: usize,
        cfg: &Bm25Config,
    ) -> RankedList {
        let n = self.doc_count();
        if n == 0 || query_terms.is_empty() {
            return RankedList::empty(Channel::Lexical, k);
        }
        let mut seen = HashSet::new();
        let terms: Vec<&str> = query_terms
            .iter()
            .map(String::as_str)
            .filter(|t| seen.insert(*t))
            .collect();

        let mut scores = vec![0.0f64; n];
        let mut touched = Vec::new();
        let mut admitted: Vec<Option<bool>> = vec![None; n];
        for field in Field::ALL {
            let index = &self.fields[field.slot()];
            let boost = cfg.field_boosts.get(field);
            for term in &terms {
                let Some(postings) = index.postings.get(*term) else {
                    continue;
                };
                let term_idf = idf(n, postings.len());
                for p in postings {
                    let d = p.doc as usize;
                    let ok = *admitted[d].get_or_insert_with(|| allow.is_none_or(|f| f(p.doc)));
                    if !ok {
                        continue;
                    }
                    let len = index.lengths[d] as f64;
                    let s =
                        boost * term_idf * tf_norm(p.tf as f64, len, index.avg_len, cfg.k1, cfg.b);
                    if scores[d] == 0.0 {
                        touched.push(d);
                    }
                    scores[d] += s;
                }
            }
        }
        RankedList::from_scores(
            Channel::Lexical,
            touched
                .into_iter()
                .filter(|&d| scores[d] > 0.0)
                .map(|d| (self.doc_ids[d].clone(), scores[d])),
            k,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc<'a>(id: &'a str, title: &'a str, skills: &'a str, desc: &'a str) -> LexicalDoc<'a> {
        LexicalDoc {
            job_id: id,
            title,
            skills,
            description: desc,
        }
    }

    fn terms(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn single_doc_title_hit_matches_hand_evaluation() {
        // N=1, df=1: idf = ln(1 + 0.5/1.5); len = avglen so tf_norm = 2.2/2.2.
        let mut b = LexicalIndexBuilder::new();
        b.add(doc("j1", "python developer", "", ""));
        let idx = b.freeze();
        let list = idx.search(&terms(&["python"]), None, 10, &Bm25Config::default());
        let expected = 3.0 * (1.0f64 + 0.5 / 1.5).ln() * 1.0;
        assert_eq!(list.len(), 1);
        assert!((list.entries[0].score - expected).abs() < 1e-12);
        assert!((list.entries[0].score - 0.863046).abs() < 1e-6);
    }

    #[test]
    fn docs_without_overlap_are_excluded() {
        let mut b = LexicalIndexBuilder::new();
        b.add(doc("j1", "python developer", "", ""));
        b.add(doc("j2", "pastry chef", "", "bake bread"));
        let idx = b.freeze();
        let list = idx.search(&terms(&["python"]), None, 10, &Bm25Config::default());
        assert_eq!(list.ids().collect::<Vec<_>>(), ["j1"]);
    }

    #[test]
    fn result_size_capped_by_corpus() {
        let mut b = LexicalIndexBuilder::new();
        let ids: Vec<String> = (0..10).map(|i| format!("j{i}")).collect();
        for id in &ids {
            b.add(doc(id, "data analyst", "sql", "reporting"));
        }
        let idx = b.freeze();
        let list = idx.search(&terms(&["analyst"]), None, 150, &Bm25Config::default());
        assert_eq!(list.len(), 10);
        assert!(list.is_well_formed());
    }

    #[test]
    fn filter_excludes_before_scoring() {
        let mut b = LexicalIndexBuilder::new();
        b.add(doc("j1", "python developer", "", ""));
        b.add(doc("j2", "python engineer", "", ""));
        let idx = b.freeze();
        let allow = |d: u32| d == 1;
        let list = idx.search(
            &terms(&["python"]),
            Some(&allow),
            10,
            &Bm25Config::default(),
        );
        assert_eq!(list.ids().collect::<Vec<_>>(), ["j2"]);
    }

    #[test]
    fn field_boosts_order_title_over_description() {
        let mut b = LexicalIndexBuilder::new();
        b.add(doc("desc", "analyst", "", "python"));
        b.add(doc("title", "python", "", "analyst"));
        let idx = b.freeze();
        let list = idx.search(&terms(&["python"]), None, 10, &Bm25Config::default());
        assert_eq!(list.ids().collect::<Vec<_>>(), ["title", "desc"]);
    }

    #[test]
    fn stop_words_only_leave_description() {
        let mut b = LexicalIndexBuilder::new();
        b.add(doc("j1", "the analyst", "", "the analyst"));
        let idx = b.freeze();
        assert_eq!(idx.doc_freq(Field::Title, "the"), 1);
        assert_eq!(idx.doc_freq(Field::Description, "the"), 0);
    }

    #[test]
    fn config_validation() {
        assert!(Bm25Config::default().validate().is_ok());
        let bad = Bm25Config {
            b: 1.5,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(Bm25ConfigError::B(1.5)));
    }

    fn vocab() -> impl Strategy<Value = String> {
        prop_oneof![
            Just("python"),
            Just("sql"),
            Just("data"),
            Just("analyst"),
            Just("go"),
            Just("cloud")
        ]
        .prop_map(str::to_string)
    }

    proptest! {
        #[test]
        fn zero_score_iff_no_overlap(
            docs in proptest::collection::vec((proptest::collection::vec(vocab(), 0..4), proptest::collection::vec(vocab(), 0..6)), 1..8),
            query in proptest::collection::vec(vocab(), 1..3),
        ) {
            let mut b = LexicalIndexBuilder::new();
            let ids: Vec<String> = (0..docs.len()).map(|i| format!("d{i:02}")).collect();
            let texts: Vec<(String, String)> = docs.iter().map(|(t, d)| (t.join(" "), d.join(" "))).collect();
            for (id, (t, d)) in ids.iter().zip(&texts) {
                b.add(doc(id, t, "", d));
            }
            let idx = b.freeze();
            let list = idx.search(&query, None, 100, &Bm25Config::default());
            prop_assert!(list.is_well_formed());
            for (i, (t, d)) in docs.iter().enumerate() {
                let overlaps = query.iter().any(|q| t.contains(q) || d.contains(q));
                prop_assert_eq!(list.rank_of(&ids[i]).is_some(), overlaps);
            }
        }

        #[test]
        fn adding_an_occurrence_never_lowers_score(
            base in proptest::collection::vec(vocab(), 0..6),
            others in proptest::collection::vec(proptest::collection::vec(vocab(), 0..6), 0..5),
            term in vocab(),
        ) {
            // Compare the same document with and without one more occurrence of
            // `term`, in a corpus that is otherwise identical.
            let score_of = |desc: &str| {
                let mut b = LexicalIndexBuilder::new();
                b.add(doc("target", "", "", desc));
                let texts: Vec<String> = others.iter().map(|o| o.join(" ")).collect();
                for (i, t) in texts.iter().enumerate() {
                    let id = format!("o{i}");
                    b.add(doc(&id, "", "", t));
                }
                let idx = b.freeze();
                let list = idx.search(std::slice::from_ref(&term), None, 100, &Bm25Config::default());
                list.entries.iter().find(|e| e.job_id == "target").map_or(0.0, |e| e.score)
            };
            let before = score_of(&base.join(" "));
            let mut more = base.clone();
            more.push(term.clone());
            let after = score_of(&more.join(" "));
            prop_assert!(after + 1e-12 >= before, "before {before} after {after}");
        }
    }
}
