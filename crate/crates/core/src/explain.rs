//! Grounded explanations rendered from factor evidence, and the audit that
//! checks them against that evidence.
//!
//! The generator only sees an [`Evidence`] value: factor values, weights and
//! structured support. It never reads posting text. Every sentence is backed
//! by a structured [`FactorMention`] whose [`Claim`]s the audit verifies.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Level, SkillId};
use crate::rerank::{
    match_percentage, Factor, FactorEvidence, FactorScores, FactorVector, LocationTier,
    WeightVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Strength,
    Weakness,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainThresholds {
    /// `φ < weakness_below` is a weakness.
    pub weakness_below: f64,
    /// `φ >= strength_at` is a strength.
    pub strength_at: f64,
}

impl Default for ExplainThresholds {
    fn default() -> Self {
        ExplainThresholds {
            weakness_below: 0.5,
            strength_at: 0.7,
        }
    }
}

impl ExplainThresholds {
    pub fn tag(&self, phi: f64) -> Tag {
        if phi < self.weakness_below {
            Tag::Weakness
        } else if phi >= self.strength_at {
            Tag::Strength
        } else {
            Tag::Neutral
        }
    }
}

/// Projection of [`FactorScores`] that the generator may use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub phi: FactorVector,
    pub weights: WeightVector,
    pub contributions: FactorVector,
    pub utility: f64,
    pub match_percentage: u32,
    pub top_factor: Factor,
    pub detail: FactorEvidence,
}

/// Highest `w_f · φ_f`; ties resolved by factor order.
pub fn top_factor(phi: &FactorVector, w: &WeightVector) -> Factor {
    let mut best = Factor::Skill;
    let mut best_value = f64::NEG_INFINITY;
    for f in Factor::ALL {
        let c = w.get(f) * phi.get(f);
        if c > best_value {
            best = f;
            best_value = c;
        }
    }
    best
}

pub fn build_evidence(factors: &FactorScores, w: &WeightVector) -> Evidence {
    let contributions =
        FactorVector::from_array(Factor::ALL.map(|f| w.get(f) * factors.phi.get(f)));
    let utility = contributions.to_array().iter().sum();
    Evidence {
        phi: factors.phi,
        weights: *w,
        contributions,
        utility,
        match_percentage: match_percentage(utility),
        top_factor: top_factor(&factors.phi, w),
        detail: factors.evidence.clone(),
    }
}

/// A checkable statement attached to a factor mention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Claim {
    MatchedSkill {
        skill: SkillId,
    },
    RelatedSkill {
        job_skill: SkillId,
        via: SkillId,
        hops: u8,
    },
    MissingSkill {
        skill: SkillId,
    },
    Levels {
        candidate: Level,
        job: Level,
    },
    LocationTier {
        tier: LocationTier,
    },
    Salary {
        expectation: f64,
        midpoint: f64,
    },
    Industry {
        industry: String,
        matched: bool,
    },
    CompanySize {
        size: String,
        matched: bool,
    },
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorMention {
    pub factor: Factor,
    pub tag: Tag,
    pub phi: f64,
    pub contribution: f64,
    pub claims: Vec<Claim>,
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub match_percentage: u32,
    pub top_factor: Factor,
    pub opening: String,
    pub mentions: Vec<FactorMention>,
    pub narrative: String,
}

impl Explanation {
    /// Rebuilds the narrative from the opening and mention sentences.
    pub fn rebuild_narrative(&mut self) {
        let mut parts = vec![self.opening.clone()];
        parts.extend(self.mentions.iter().map(|m| m.sentence.clone()));
        self.narrative = parts.join(" ");
    }
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing templates: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Phrasing used by the template generator. Placeholders are `{name}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Templates {
    pub thresholds: ExplainThresholds,
    pub opening: String,
    pub quality_strong: String,
    pub quality_moderate: String,
    pub quality_weak: String,
    pub sentence: String,
    pub labels: BTreeMap<String, String>,
    pub tags: BTreeMap<String, String>,
    pub fragments: BTreeMap<String, String>,
}

fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

impl Default for Templates {
    fn default() -> Self {
        Templates {
            thresholds: ExplainThresholds::default(),
            opening: "This role is a {quality} match ({percent}%), driven mainly by {top_label}."
                .into(),
            quality_strong: "strong".into(),
            quality_moderate: "moderate".into(),
            quality_weak: "weak".into(),
            sentence: "{label} is {tag} ({pct}%): {detail}.".into(),
            labels: map(&[
                ("skill", "Skill fit"),
                ("experience", "Experience fit"),
                ("location", "Location fit"),
                ("salary", "Salary fit"),
                ("semantic", "Semantic similarity"),
                ("company", "Company fit"),
            ]),
            tags: map(&[
                ("strength", "a strength"),
                ("weakness", "a weakness"),
                ("neutral", "moderate"),
            ]),
            fragments: map(&[
                ("skill_matched", "you already have {skills}"),
                (
                    "skill_related",
                    "{skill} is related to your {via} experience",
                ),
                ("skill_missing", "the role also asks for {skills}"),
                ("skill_none_required", "the role lists no required skills"),
                (
                    "skill_no_overlap",
                    "none of the required skills overlap with yours",
                ),
                (
                    "experience_levels",
                    "your {candidate} level against the {job} level of the role",
                ),
                (
                    "experience_unknown",
                    "the seniority of the role or of your profile is not stated",
                ),
                (
                    "location_exact",
                    "the role is in {job_location}, one of your preferred locations",
                ),
                (
                    "location_remote",
                    "the role allows remote work, which you prefer",
                ),
                (
                    "location_state",
                    "the role is in {job_location}, in the same state as {preference}",
                ),
                (
                    "location_none",
                    "the role is in {job_location}, outside your preferred locations",
                ),
                ("location_missing", "location details are incomplete"),
                (
                    "salary_band",
                    "the band midpoint is ${midpoint} against your expectation of ${expectation}",
                ),
                ("salary_missing", "salary details are incomplete"),
                ("semantic_close", "the posting reads close to your profile"),
                (
                    "semantic_far",
                    "the posting reads differently from your profile",
                ),
                (
                    "company_industry_match",
                    "the {industry} industry is one you prefer",
                ),
                (
                    "company_industry_miss",
                    "the industry is not among your preferences",
                ),
                ("company_size_match", "the {size} company size suits you"),
                (
                    "company_size_miss",
                    "the company size is not among your preferences",
                ),
                ("company_no_preference", "you stated no company preferences"),
                (
                    "not_applicable",
                    "no profile was supplied, so this factor is held neutral",
                ),
            ]),
        }
    }
}

impl Templates {
    pub fn from_toml_str(text: &str) -> Result<Self, TemplateError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TemplateError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    fn get<'a>(table: &'a BTreeMap<String, String>, key: &'a str) -> &'a str {
        table.get(key).map(String::as_str).unwrap_or(key)
    }

    fn fragment(&self, key: &str, vars: &[(&str, String)]) -> String {
        fill(Self::get(&self.fragments, key), vars)
    }
}

fn fill(template: &str, vars: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

fn skill_name(s: &SkillId) -> String {
    s.as_str().replace('-', " ")
}

fn join_skills<'a>(skills: impl IntoIterator<Item = &'a SkillId>) -> String {
    skills
        .into_iter()
        .map(skill_name)
        .collect::<Vec<_>>()
        .join(", ")
}

fn pct(v: f64) -> u32 {
    (100.0 * v).round().clamp(0.0, 100.0) as u32
}

fn money(v: f64) -> String {
    let n = v.round() as i64;
    let digits = n.abs().to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    if n < 0 {
        format!("-{out}")
    } else {
        out
    }
}

/// Detail text and claims for one factor.
fn factor_detail(f: Factor, ev: &Evidence, t: &Templates) -> (String, Vec<Claim>) {
    let d = &ev.detail;
    let na = || {
        (
            t.fragment("not_applicable", &[]),
            vec![Claim::NotApplicable],
        )
    };
    match f {
        Factor::Skill => {
            let s = &d.skill;
            let mut parts = Vec::new();
            let mut claims = Vec::new();
            if s.required_count == 0 {
                parts.push(t.fragment("skill_none_required", &[]));
            }
            if !s.matched.is_empty() {
                parts.push(t.fragment("skill_matched", &[("skills", join_skills(&s.matched))]));
                claims.extend(
                    s.matched
                        .iter()
                        .map(|k| Claim::MatchedSkill { skill: k.clone() }),
                );
            }
            for b in &s.bonus {
                let via = b
                    .path
                    .nodes
                    .first()
                    .cloned()
                    .unwrap_or_else(|| b.job_skill.clone());
                parts.push(t.fragment(
                    "skill_related",
                    &[
                        ("skill", skill_name(&b.job_skill)),
                        ("via", skill_name(&via)),
                    ],
                ));
                claims.push(Claim::RelatedSkill {
                    job_skill: b.job_skill.clone(),
                    via,
                    hops: b.path.hop_count,
                });
            }
            if !s.missing.is_empty() {
                if s.matched.is_empty() && s.bonus.is_empty() {
                    parts.push(t.fragment("skill_no_overlap", &[]));
                }
                parts.push(t.fragment("skill_missing", &[("skills", join_skills(&s.missing))]));
                claims.extend(
                    s.missing
                        .iter()
                        .map(|k| Claim::MissingSkill { skill: k.clone() }),
                );
            }
            (parts.join("; "), claims)
        }
        Factor::Experience => match &d.experience {
            None => na(),
            Some(e) if e.distance.is_some() => (
                t.fragment(
                    "experience_levels",
                    &[
                        ("candidate", e.candidate.as_str().into()),
                        ("job", e.job.as_str().into()),
                    ],
                ),
                vec![Claim::Levels {
                    candidate: e.candidate,
                    job: e.job,
                }],
            ),
            Some(e) => (
                t.fragment("experience_unknown", &[]),
                vec![Claim::Levels {
                    candidate: e.candidate,
                    job: e.job,
                }],
            ),
        },
        Factor::Location => match &d.location {
            None => na(),
            Some(l) => {
                let key = format!("location_{}", l.tier.as_str());
                let text = t.fragment(
                    &key,
                    &[
                        ("job_location", l.job_location.clone().unwrap_or_default()),
                        (
                            "preference",
                            l.matched_preference.clone().unwrap_or_default(),
                        ),
                    ],
                );
                (text, vec![Claim::LocationTier { tier: l.tier }])
            }
        },
        Factor::Salary => match &d.salary {
            None => na(),
            Some(s) => match (s.expectation, s.midpoint) {
                (Some(e), Some(m)) => (
                    t.fragment(
                        "salary_band",
                        &[("midpoint", money(m)), ("expectation", money(e))],
                    ),
                    vec![Claim::Salary {
                        expectation: e,
                        midpoint: m,
                    }],
                ),
                _ => (t.fragment("salary_missing", &[]), Vec::new()),
            },
        },
        Factor::Semantic => {
            let key = if ev.phi.semantic >= 0.5 {
                "semantic_close"
            } else {
                "semantic_far"
            };
            (t.fragment(key, &[]), Vec::new())
        }
        Factor::Company => match &d.company {
            None => na(),
            Some(c) => {
                let mut parts = Vec::new();
                let mut claims = Vec::new();
                match (c.industry_match, &c.industry) {
                    (Some(true), Some(ind)) => {
                        parts.push(
                            t.fragment("company_industry_match", &[("industry", ind.clone())]),
                        );
                        claims.push(Claim::Industry {
                            industry: ind.clone(),
                            matched: true,
                        });
                    }
                    (Some(_), _) => parts.push(t.fragment("company_industry_miss", &[])),
                    (None, _) => {}
                }
                match (c.size_match, &c.size) {
                    (Some(true), Some(size)) => {
                        parts.push(t.fragment("company_size_match", &[("size", size.clone())]));
                        claims.push(Claim::CompanySize {
                            size: size.clone(),
                            matched: true,
                        });
                    }
                    (Some(_), _) => parts.push(t.fragment("company_size_miss", &[])),
                    (None, _) => {}
                }
                if parts.is_empty() {
                    parts.push(t.fragment("company_no_preference", &[]));
                }
                (parts.join("; "), claims)
            }
        },
    }
}

fn mention(f: Factor, ev: &Evidence, t: &Templates) -> FactorMention {
    let phi = ev.phi.get(f);
    let tag = t.thresholds.tag(phi);
    let (detail, claims) = factor_detail(f, ev, t);
    let tag_key = match tag {
        Tag::Strength => "strength",
        Tag::Weakness => "weakness",
        Tag::Neutral => "neutral",
    };
    let sentence = fill(
        &t.sentence,
        &[
            ("label", Templates::get(&t.labels, f.as_str()).to_string()),
            ("tag", Templates::get(&t.tags, tag_key).to_string()),
            ("pct", pct(phi).to_string()),
            ("detail", detail),
        ],
    );
    FactorMention {
        factor: f,
        tag,
        phi,
        contribution: ev.contributions.get(f),
        claims,
        sentence,
    }
}

/// Deterministic template rendering. The top factor is always mentioned
/// first, followed by every strength and weakness in factor order.
pub fn render_explanation(ev: &Evidence, t: &Templates) -> Explanation {
    let quality = if ev.match_percentage >= 75 {
        &t.quality_strong
    } else if ev.match_percentage >= 50 {
        &t.quality_moderate
    } else {
        &t.quality_weak
    };
    let opening = fill(
        &t.opening,
        &[
            ("quality", quality.clone()),
            ("percent", ev.match_percentage.to_string()),
            (
                "top_label",
                Templates::get(&t.labels, ev.top_factor.as_str()).to_lowercase(),
            ),
        ],
    );
    let mut mentions = vec![mention(ev.top_factor, ev, t)];
    for f in Factor::ALL {
        if f != ev.top_factor && t.thresholds.tag(ev.phi.get(f)) != Tag::Neutral {
            mentions.push(mention(f, ev, t));
        }
    }
    let mut e = Explanation {
        match_percentage: ev.match_percentage,
        top_factor: ev.top_factor,
        opening,
        mentions,
        narrative: String::new(),
    };
    e.rebuild_narrative();
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditResult {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
}

impl AuditResult {
    pub fn all(&self) -> bool {
        self.c1 && self.c2 && self.c3
    }
}

fn claim_supported(claim: &Claim, factor: Factor, d: &FactorEvidence) -> bool {
    match (factor, claim) {
        (Factor::Skill, Claim::MatchedSkill { skill }) => d.skill.matched.contains(skill),
        (Factor::Skill, Claim::MissingSkill { skill }) => d.skill.missing.contains(skill),
        (
            Factor::Skill,
            Claim::RelatedSkill {
                job_skill,
                via,
                hops,
            },
        ) => d.skill.bonus.iter().any(|b| {
            &b.job_skill == job_skill
                && b.path.nodes.first() == Some(via)
                && b.path.hop_count == *hops
        }),
        (Factor::Experience, Claim::Levels { candidate, job }) => d
            .experience
            .as_ref()
            .is_some_and(|e| e.candidate == *candidate && e.job == *job),
        (Factor::Location, Claim::LocationTier { tier }) => {
            d.location.as_ref().is_some_and(|l| l.tier == *tier)
        }
        (
            Factor::Salary,
            Claim::Salary {
                expectation,
                midpoint,
            },
        ) => d
            .salary
            .as_ref()
            .is_some_and(|s| s.expectation == Some(*expectation) && s.midpoint == Some(*midpoint)),
        (Factor::Company, Claim::Industry { industry, matched }) => {
            d.company.as_ref().is_some_and(|c| {
                c.industry.as_ref() == Some(industry) && c.industry_match == Some(*matched)
            })
        }
        (Factor::Company, Claim::CompanySize { size, matched }) => d
            .company
            .as_ref()
            .is_some_and(|c| c.size.as_ref() == Some(size) && c.size_match == Some(*matched)),
        (Factor::Experience, Claim::NotApplicable) => d.experience.is_none(),
        (Factor::Location, Claim::NotApplicable) => d.location.is_none(),
        (Factor::Salary, Claim::NotApplicable) => d.salary.is_none(),
        (Factor::Company, Claim::NotApplicable) => d.company.is_none(),
        _ => false,
    }
}

/// Numbers that a faithful narrative may state.
fn allowed_numbers(ev: &Evidence) -> Vec<f64> {
    let mut out = vec![ev.match_percentage as f64];
    out.extend(Factor::ALL.iter().map(|f| pct(ev.phi.get(*f)) as f64));
    if let Some(s) = &ev.detail.salary {
        out.extend(s.expectation.map(f64::round));
        out.extend(s.midpoint.map(f64::round));
    }
    out
}

/// Standalone numbers in `text` (thousands separators allowed).
pub fn numbers_in(text: &str) -> Vec<f64> {
    text.split(|c: char| c.is_whitespace() || "()[]:;/".contains(c))
        .filter_map(|tok| {
            let tok = tok
                .trim_start_matches('$')
                .trim_end_matches(['.', ',', '%', '!', '?']);
            let tok = tok.trim_end_matches('%');
            if tok.is_empty() || !tok.starts_with(|c: char| c.is_ascii_digit()) {
                return None;
            }
            if !tok
                .chars()
                .all(|c| c.is_ascii_digit() || c == ',' || c == '.')
            {
                return None;
            }
            tok.replace(',', "").parse().ok()
        })
        .collect()
}

/// C1: the top-contributing factor is mentioned. C2: every factor below the
/// weakness threshold is mentioned as a weakness. C3: every mention's values
/// and claims match the evidence, and every number in the narrative is one
/// the evidence supports.
pub fn audit_explanation(
    expl: &Explanation,
    factors: &FactorScores,
    w: &WeightVector,
    t: &ExplainThresholds,
) -> AuditResult {
    let ev = build_evidence(factors, w);
    let c1 = expl.mentions.iter().any(|m| m.factor == ev.top_factor);
    let c2 = Factor::ALL
        .iter()
        .filter(|f| ev.phi.get(**f) < t.weakness_below)
        .all(|f| {
            expl.mentions
                .iter()
                .any(|m| m.factor == *f && m.tag == Tag::Weakness)
        });
    let mentions_ok = expl.mentions.iter().all(|m| {
        (m.phi - ev.phi.get(m.factor)).abs() < 1e-12
            && (m.contribution - ev.contributions.get(m.factor)).abs() < 1e-12
            && m.tag == t.tag(m.phi)
            && m.claims
                .iter()
                .all(|c| claim_supported(c, m.factor, &ev.detail))
    });
    let allowed = allowed_numbers(&ev);
    let numbers_ok = numbers_in(&expl.narrative)
        .iter()
        .all(|n| allowed.iter().any(|a| (a - n).abs() < 1e-9));
    let c3 = mentions_ok && numbers_ok && expl.match_percentage == ev.match_percentage;
    AuditResult { c1, c2, c3 }
}

/// Alternative narrator, for example a hosted language model.
pub trait ExternalGenerator: Send + Sync {
    fn generate(&self, evidence: &Evidence) -> Result<Explanation, String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExplainWarning {
    ExternalGeneratorRejected {
        audit: Option<AuditResult>,
        reason: String,
    },
}

/// Renders with `external` when given, falling back to templates when its
/// output fails the audit or the call fails.
pub fn explain(
    factors: &FactorScores,
    w: &WeightVector,
    t: &Templates,
    external: Option<&dyn ExternalGenerator>,
) -> (Explanation, Option<ExplainWarning>) {
    let ev = build_evidence(factors, w);
    if let Some(gen) = external {
        match gen.generate(&ev) {
            Ok(e) => {
                let audit = audit_explanation(&e, factors, w, &t.thresholds);
                if audit.all() {
                    return (e, None);
                }
                return (
                    render_explanation(&ev, t),
                    Some(ExplainWarning::ExternalGeneratorRejected {
                        audit: Some(audit),
                        reason: "audit failed".into(),
                    }),
                );
            }
            Err(reason) => {
                return (
                    render_explanation(&ev, t),
                    Some(ExplainWarning::ExternalGeneratorRejected {
                        audit: None,
                        reason,
                    }),
                )
            }
        }
    }
    (render_explanation(&ev, t), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SkillPath;
    use crate::rerank::{LocationEvidence, SemanticEvidence, SkillBonus, SkillEvidence};

    fn sid(s: &str) -> SkillId {
        SkillId::new(s)
    }

    fn scores(phi: [f64; 6]) -> FactorScores {
        let w = WeightVector::default();
        let phi = FactorVector::from_array(phi);
        FactorScores {
            phi,
            utility: crate::rerank::utility(&phi, &w),
            weights: w,
            evidence: FactorEvidence {
                skill: SkillEvidence {
                    matched: vec![sid("python")],
                    bonus: vec![SkillBonus {
                        job_skill: sid("docker"),
                        path: SkillPath {
                            nodes: vec![sid("kubernetes"), sid("docker")],
                            hop_count: 1,
                        },
                        credit: 0.25,
                    }],
                    missing: vec![sid("sql")],
                    required_count: 3,
                    candidate_count: 2,
                    jaccard: 0.25,
                },
                experience: None,
                location: Some(LocationEvidence {
                    tier: LocationTier::None,
                    job_location: Some("Albany, NY".into()),
                    matched_preference: None,
                }),
                salary: None,
                semantic: SemanticEvidence { cosine: 0.2 },
                company: None,
            },
        }
    }

    fn render(f: &FactorScores) -> Explanation {
        render_explanation(&build_evidence(f, &f.weights), &Templates::default())
    }

    #[test]
    fn top_factor_tie_break() {
        let w = WeightVector::normalize(FactorVector::uniform(1.0)).unwrap();
        assert_eq!(top_factor(&FactorVector::uniform(0.5), &w), Factor::Skill);
    }

    #[test]
    fn strong_skill_weak_location() {
        let f = scores([0.95, 0.5, 0.3, 0.5, 0.6, 0.5]);
        let e = render(&f);
        assert_eq!(e.top_factor, Factor::Skill);
        assert_eq!(e.mentions[0].tag, Tag::Strength);
        assert!(e
            .mentions
            .iter()
            .any(|m| m.factor == Factor::Location && m.tag == Tag::Weakness));
        assert!(e.narrative.contains("Location fit is a weakness"));
        assert!(audit_explanation(&e, &f, &f.weights, &ExplainThresholds::default()).all());
    }

    #[test]
    fn all_ones_has_no_weakness_and_neutral_names_top() {
        let e = render(&scores([1.0; 6]));
        assert!(e.mentions.iter().all(|m| m.tag != Tag::Weakness));
        let e = render(&scores([0.5; 6]));
        assert_eq!(e.mentions.len(), 1);
        assert_eq!(e.mentions[0].factor, Factor::Skill);
        assert_eq!(e.mentions[0].tag, Tag::Neutral);
    }

    #[test]
    fn rendering_is_pure() {
        let f = scores([0.2, 0.9, 0.4, 0.1, 0.8, 0.5]);
        assert_eq!(render(&f), render(&f));
    }

    #[test]
    fn deleting_top_sentence_breaks_c1() {
        let f = scores([0.95, 0.5, 0.3, 0.5, 0.6, 0.5]);
        let mut e = render(&f);
        e.mentions.retain(|m| m.factor != e.top_factor);
        e.rebuild_narrative();
        let a = audit_explanation(&e, &f, &f.weights, &ExplainThresholds::default());
        assert!(!a.c1);
        assert!(a.c2 && a.c3);
    }

    #[test]
    fn unsupported_claims_break_c3() {
        let f = scores([0.95, 0.5, 0.3, 0.5, 0.6, 0.5]);
        let t = ExplainThresholds::default();
        let mut e = render(&f);
        e.mentions[0]
            .claims
            .push(Claim::MatchedSkill { skill: sid("rust") });
        assert!(!audit_explanation(&e, &f, &f.weights, &t).c3);

        let mut e = render(&f);
        e.narrative.push_str(" You also match 12 other roles.");
        assert!(!audit_explanation(&e, &f, &f.weights, &t).c3);
    }

    #[test]
    fn dropping_a_weakness_breaks_c2() {
        let f = scores([0.95, 0.5, 0.3, 0.5, 0.6, 0.5]);
        let mut e = render(&f);
        e.mentions.retain(|m| m.factor != Factor::Location);
        assert!(!audit_explanation(&e, &f, &f.weights, &ExplainThresholds::default()).c2);
    }

    #[test]
    fn reweighting_changes_percentage() {
        let f = scores([0.9, 0.1, 0.5, 0.5, 0.5, 0.5]);
        let a = render(&f);
        let w = WeightVector::normalize(FactorVector {
            experience: 1.0,
            ..Default::default()
        })
        .unwrap();
        let b = render_explanation(&build_evidence(&f, &w), &Templates::default());
        assert_ne!(a.match_percentage, b.match_percentage);
        assert_eq!(b.top_factor, Factor::Experience);
        assert!(audit_explanation(&b, &f, &w, &ExplainThresholds::default()).all());
    }

    struct Liar;
    impl ExternalGenerator for Liar {
        fn generate(&self, ev: &Evidence) -> Result<Explanation, String> {
            let mut e = render_explanation(ev, &Templates::default());
            e.narrative = "A 99% match.".into();
            Ok(e)
        }
    }

    #[test]
    fn external_output_failing_audit_falls_back() {
        let f = scores([0.95, 0.5, 0.3, 0.5, 0.6, 0.5]);
        let (e, warn) = explain(&f, &f.weights, &Templates::default(), Some(&Liar));
        assert!(matches!(
            warn,
            Some(ExplainWarning::ExternalGeneratorRejected { .. })
        ));
        assert_eq!(e, render(&f));
    }

    #[test]
    fn number_extraction() {
        assert_eq!(
            numbers_in("strong match (87%): $145,000 vs 3 items."),
            [87.0, 145_000.0, 3.0]
        );
        assert!(numbers_in("s3 and ec2 and c++").is_empty());
    }

    #[test]
    fn shipped_templates_equal_defaults() {
        let t = Templates::from_toml_str(include_str!("../../../config/explain_templates.toml"))
            .unwrap();
        assert_eq!(t, Templates::default());
    }
}
