//! Typed in-process knowledge graph over candidates, jobs, skills, locations
//! and companies.
//!
//! Adjacency is kept per relation in ordered maps so every traversal is
//! deterministic. `RELATED_TO` is stored in both directions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CandidateProfile, Channel, JobPosting, Location, RankedList, SkillId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Skill,
    Job,
    Candidate,
    Location,
    Company,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Relation {
    HasSkill,
    RequiresSkill,
    RelatedTo,
    LocatedIn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub expansion_depth: usize,
    /// Channel score contributed by a matched skill at hop distance 0, 1, 2, ...
    pub hop_weights: Vec<f64>,
    pub neighborhood_budget: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            expansion_depth: 2,
            hop_weights: vec![1.0, 0.5, 0.25],
            neighborhood_budget: 100,
        }
    }
}

impl GraphConfig {
    pub fn hop_weight(&self, distance: u8) -> f64 {
        self.hop_weights
            .get(distance as usize)
            .copied()
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum GraphError {
    #[error("relation ({0}, {1}) references an unknown skill")]
    DanglingEdge(String, String),
    #[error("relation ({0}, {0}) is a self-loop")]
    SelfLoop(String),
    #[error("unknown skill: {0}")]
    UnknownSkill(String),
}

/// Problems found while loading relations; offending edges are skipped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub rejected_relations: Vec<GraphError>,
}

/// Skills with their minimal `RELATED_TO` hop distance from the seed set.
pub type ExpandedSkills = BTreeMap<SkillId, u8>;

/// A chain of skills from a candidate skill to a job skill.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillPath {
    pub nodes: Vec<SkillId>,
    pub hop_count: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub kind: NodeKind,
    pub label: String,
    pub distance: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphLink {
    pub source: String,
    pub target: String,
    pub relation: Relation,
}

/// Node-link subgraph for visualisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgraph {
    pub center: String,
    pub radius: u8,
    pub nodes: Vec<GraphNode>,
    pub links: Vec<GraphLink>,
    pub truncated: bool,
}

fn node_id(kind: NodeKind, id: &str) -> String {
    let prefix = match kind {
        NodeKind::Skill => "skill",
        NodeKind::Job => "job",
        NodeKind::Candidate => "candidate",
        NodeKind::Location => "location",
        NodeKind::Company => "company",
    };
    format!("{prefix}:{id}")
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct KnowledgeGraph {
    skills: BTreeSet<SkillId>,
    jobs: BTreeMap<String, String>,
    candidates: BTreeSet<String>,
    locations: BTreeSet<String>,
    companies: BTreeSet<String>,
    /// job -> skill -> `true` when the skill is only preferred.
    requires: BTreeMap<String, BTreeMap<SkillId, bool>>,
    required_by: BTreeMap<SkillId, BTreeSet<String>>,
    has_skill: BTreeMap<String, BTreeSet<SkillId>>,
    related: BTreeMap<SkillId, BTreeSet<SkillId>>,
    /// `kind:id` -> location keys.
    located_in: BTreeMap<String, BTreeSet<String>>,
}

impl KnowledgeGraph {
    /// Builds the graph. `known_skills` seeds the skill node set; skills used
    /// by postings or profiles are added as well. Relations naming a skill
    /// outside that set are rejected and reported.
    pub fn build<'a>(
        postings: impl IntoIterator<Item = &'a JobPosting>,
        profiles: impl IntoIterator<Item = &'a CandidateProfile>,
        relations: &[(SkillId, SkillId)],
        known_skills: &BTreeSet<SkillId>,
    ) -> (KnowledgeGraph, GraphReport) {
        let mut g = KnowledgeGraph {
            skills: known_skills.clone(),
            ..Default::default()
        };
        for p in postings {
            g.add_job(p);
        }
        for c in profiles {
            g.add_candidate(c);
        }
        let mut report = GraphReport::default();
        for (a, b) in relations {
            if let Err(e) = g.add_relation(a, b) {
                report.rejected_relations.push(e);
            }
        }
        (g, report)
    }

    fn add_location(&mut self, owner: String, loc: &Location) {
        if let Some(key) = loc.node_key() {
            self.locations.insert(key.clone());
            self.located_in.entry(owner).or_default().insert(key);
        }
    }

    pub fn add_job(&mut self, p: &JobPosting) {
        self.jobs.insert(p.job_id.clone(), p.title.clone());
        let edges = self.requires.entry(p.job_id.clone()).or_default();
        for s in &p.preferred_skills {
            edges.insert(s.clone(), true);
        }
        for s in &p.required_skills {
            edges.insert(s.clone(), false);
        }
        for s in p.all_skills() {
            self.skills.insert(s.clone());
            self.required_by
                .entry(s)
                .or_default()
                .insert(p.job_id.clone());
        }
        self.add_location(node_id(NodeKind::Job, &p.job_id), &p.location);
        if !p.company.name.is_empty() {
            self.companies.insert(p.company.name.clone());
        }
    }

    pub fn add_candidate(&mut self, c: &CandidateProfile) {
        self.candidates.insert(c.profile_id.clone());
        for s in &c.skills {
            self.skills.insert(s.clone());
        }
        self.has_skill
            .entry(c.profile_id.clone())
            .or_default()
            .extend(c.skills.iter().cloned());
        for loc in &c.preferred_locations {
            self.add_location(node_id(NodeKind::Candidate, &c.profile_id), loc);
        }
    }

    pub fn add_relation(&mut self, a: &SkillId, b: &SkillId) -> Result<(), GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop(a.to_string()));
        }
        if !self.skills.contains(a) || !self.skills.contains(b) {
            return Err(GraphError::DanglingEdge(a.to_string(), b.to_string()));
        }
        self.related.entry(a.clone()).or_default().insert(b.clone());
        self.related.entry(b.clone()).or_default().insert(a.clone());
        Ok(())
    }

    pub fn contains_skill(&self, s: &SkillId) -> bool {
        self.skills.contains(s)
    }

    pub fn job_count(&self) -> usize {
        self.jobs.len()
    }

    pub fn skill_count(&self) -> usize {
        self.skills.len()
    }

    pub fn node_count(&self, kind: NodeKind) -> usize {
        match kind {
            NodeKind::Skill => self.skills.len(),
            NodeKind::Job => self.jobs.len(),
            NodeKind::Candidate => self.candidates.len(),
            NodeKind::Location => self.locations.len(),
            NodeKind::Company => self.companies.len(),
        }
    }

    pub fn requires_skill(&self, job_id: &str, skill: &SkillId) -> bool {
        self.requires
            .get(job_id)
            .is_some_and(|m| m.contains_key(skill))
    }

    /// Whether the `REQUIRES_SKILL` edge is flagged as a preferred skill.
    pub fn is_preferred_edge(&self, job_id: &str, skill: &SkillId) -> Option<bool> {
        self.requires.get(job_id)?.get(skill).copied()
    }

    pub fn jobs_requiring(&self, skill: &SkillId) -> impl Iterator<Item = &str> {
        self.required_by
            .get(skill)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    pub fn related_skills(&self, skill: &SkillId) -> impl Iterator<Item = &SkillId> {
        self.related.get(skill).into_iter().flatten()
    }

    pub fn candidate_skills(&self, profile_id: &str) -> Option<&BTreeSet<SkillId>> {
        self.has_skill.get(profile_id)
    }

    pub fn locations_of(&self, kind: NodeKind, id: &str) -> impl Iterator<Item = &str> {
        self.located_in
            .get(&node_id(kind, id))
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    pub fn relation_count(&self) -> usize {
        self.related.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Multi-source BFS over `RELATED_TO` up to `depth` hops. Seeds are kept
    /// at distance 0 even when the graph does not know them.
    pub fn expand_skills(&self, seeds: &BTreeSet<SkillId>, depth: usize) -> ExpandedSkills {
        let mut dist: ExpandedSkills = seeds.iter().map(|s| (s.clone(), 0)).collect();
        let mut queue: VecDeque<SkillId> = seeds.iter().cloned().collect();
        while let Some(s) = queue.pop_front() {
            let d = dist[&s];
            if d as usize >= depth {
                continue;
            }
            for n in self.related_skills(&s) {
                if !dist.contains_key(n) {
                    dist.insert(n.clone(), d + 1);
                    queue.push_back(n.clone());
                }
            }
        }
        dist
    }

    /// Minimal `RELATED_TO` hop count if at most 2, else `None`.
    pub fn relatedness(&self, a: &SkillId, b: &SkillId) -> Option<u8> {
        if a == b {
            return Some(0);
        }
        if !self.skills.contains(a) || !self.skills.contains(b) {
            return None;
        }
        self.expand_skills(&BTreeSet::from([a.clone()]), 2)
            .get(b)
            .copied()
    }

    /// Shortest `RELATED_TO` path from any of `from` to `target`, within
    /// `max_hops`. Ties go to the lexicographically smallest path.
    pub fn shortest_path(
        &self,
        from: &BTreeSet<SkillId>,
        target: &SkillId,
        max_hops: u8,
    ) -> Option<SkillPath> {
        if from.contains(target) {
            return Some(SkillPath {
                nodes: vec![target.clone()],
                hop_count: 0,
            });
        }
        // BFS outward from the target; `next` points one step closer to it.
        let mut next: BTreeMap<SkillId, SkillId> = BTreeMap::new();
        let mut frontier = vec![target.clone()];
        let mut seen = BTreeSet::from([target.clone()]);
        for _ in 0..max_hops {
            let mut found: Vec<SkillId> = Vec::new();
            let mut upcoming = Vec::new();
            for s in &frontier {
                for n in self.related_skills(s) {
                    if seen.insert(n.clone()) {
                        next.insert(n.clone(), s.clone());
                        upcoming.push(n.clone());
                        if from.contains(n) {
                            found.push(n.clone());
                        }
                    }
                }
            }
            if let Some(start) = found.into_iter().min() {
                let mut nodes = vec![start.clone()];
                let mut cur = start;
                while let Some(n) = next.get(&cur) {
                    nodes.push(n.clone());
                    cur = n.clone();
                }
                let hop_count = (nodes.len() - 1) as u8;
                return Some(SkillPath { nodes, hop_count });
            }
            upcoming.sort();
            frontier = upcoming;
        }
        None
    }

    /// Graph channel: each job scores `Σ hop_weight(distance)` over its
    /// skills that appear in `expanded`.
    pub fn graph_search(
        &self,
        expanded: &ExpandedSkills,
        k: usize,
        cfg: &GraphConfig,
    ) -> RankedList {
        let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
        for (skill, &d) in expanded {
            let w = cfg.hop_weight(d);
            if w <= 0.0 {
                continue;
            }
            for job in self.jobs_requiring(skill) {
                *scores.entry(job).or_default() += w;
            }
        }
        RankedList::from_scores(Channel::Graph, scores, k)
    }

    /// Skills within `radius` of `skill` plus the jobs requiring them, nearest
    /// first, capped at `budget` nodes.
    pub fn neighborhood(
        &self,
        skill: &SkillId,
        radius: u8,
        budget: usize,
    ) -> Result<Subgraph, GraphError> {
        if !self.skills.contains(skill) {
            return Err(GraphError::UnknownSkill(skill.to_string()));
        }
        let skills = self.expand_skills(&BTreeSet::from([skill.clone()]), radius as usize);
        let mut nodes: Vec<GraphNode> = Vec::new();
        let mut job_dist: BTreeMap<&str, u8> = BTreeMap::new();
        for (s, &d) in &skills {
            nodes.push(GraphNode {
                id: node_id(NodeKind::Skill, s.as_str()),
                kind: NodeKind::Skill,
                label: s.to_string(),
                distance: d,
            });
            for job in self.jobs_requiring(s) {
                let e = job_dist.entry(job).or_insert(u8::MAX);
                *e = (*e).min(d + 1);
            }
        }
        for (job, d) in job_dist {
            nodes.push(GraphNode {
                id: node_id(NodeKind::Job, job),
                kind: NodeKind::Job,
                label: self.jobs.get(job).cloned().unwrap_or_default(),
                distance: d,
            });
        }
        nodes.sort_by(|a, b| (a.distance, a.kind, &a.id).cmp(&(b.distance, b.kind, &b.id)));
        let truncated = nodes.len() > budget;
        nodes.truncate(budget);

        let kept: BTreeSet<&str> = nodes.iter().map(|n| n.id.as_str()).collect();
        let mut links = Vec::new();
        for s in skills.keys() {
            let sid = node_id(NodeKind::Skill, s.as_str());
            if !kept.contains(sid.as_str()) {
                continue;
            }
            for n in self.related_skills(s) {
                let nid = node_id(NodeKind::Skill, n.as_str());
                if s < n && kept.contains(nid.as_str()) {
                    links.push(GraphLink {
                        source: sid.clone(),
                        target: nid,
                        relation: Relation::RelatedTo,
                    });
                }
            }
            for job in self.jobs_requiring(s) {
                let jid = node_id(NodeKind::Job, job);
                if kept.contains(jid.as_str()) {
                    links.push(GraphLink {
                        source: jid,
                        target: sid.clone(),
                        relation: Relation::RequiresSkill,
                    });
                }
            }
        }
        Ok(Subgraph {
            center: node_id(NodeKind::Skill, skill.as_str()),
            radius,
            nodes,
            links,
            truncated,
        })
    }
}
