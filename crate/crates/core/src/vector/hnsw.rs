//! Hierarchical navigable small-world graph for approximate inner-product search.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, KnnConfig};

const MAX_LEVEL: usize = 16;

#[derive(Debug, Clone, Copy)]
struct Cand {
    sim: f64,
    id: u32,
}

impl PartialEq for Cand {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cand {}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cand {
    /// Higher similarity is greater; ties favour the lower id.
    fn cmp(&self, other: &Self) -> Ordering {
        self.sim
            .total_cmp(&other.sim)
            .then_with(|| other.id.cmp(&self.id))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hnsw {
    /// `links[node][level]` lists neighbour node ids.
    links: Vec<Vec<Vec<u32>>>,
    entry: Option<u32>,
    top_level: usize,
    m: usize,
}

impl Hnsw {
    /// Builds the graph over `vectors`, a row-major matrix of `dim`-wide rows.
    pub fn build(vectors: &[f64], dim: usize, cfg: &KnnConfig) -> Hnsw {
        let n = vectors.len() / dim;
        let m = cfg.m.max(2);
        let mut graph = Hnsw {
            links: Vec::with_capacity(n),
            entry: None,
            top_level: 0,
            m,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let level_mult = 1.0 / (m as f64).ln();
        let ef = cfg.ef_construction.max(m);
        for node in 0..n {
            let u: f64 = rng.random_range(f64::EPSILON..1.0);
            let level = ((-u.ln() * level_mult).floor() as usize).min(MAX_LEVEL);
            graph.insert(vectors, dim, node as u32, level, ef);
        }
        graph
    }

    fn max_links(&self, level: usize) -> usize {
        if level == 0 {
            self.m * 2
        } else {
            self.m
        }
    }

    fn insert(&mut self, vectors: &[f64], dim: usize, node: u32, level: usize, ef: usize) {
        self.links.push(vec![Vec::new(); level + 1]);
        let Some(entry) = self.entry else {
            self.entry = Some(node);
            self.top_level = level;
            return;
        };
        let q = row(vectors, dim, node);
        let mut eps = vec![entry];
        for lev in (level + 1..=self.top_level).rev() {
            let best = self.search_layer(vectors, dim, q, &eps, 1, lev);
            eps = vec![best[0].id];
        }
        for lev in (0..=level.min(self.top_level)).rev() {
            let found = self.search_layer(vectors, dim, q, &eps, ef, lev);
            let chosen: Vec<u32> = found.iter().take(self.m).map(|c| c.id).collect();
            let cap = self.max_links(lev);
            for &nb in &chosen {
                let list = &mut self.links[nb as usize][lev];
                list.push(node);
                if list.len() > cap {
                    let base = row(vectors, dim, nb);
                    let mut scored: Vec<Cand> = list
                        .iter()
                        .map(|&id| Cand {
                            sim: dot(base, row(vectors, dim, id)),
                            id,
                        })
                        .collect();
                    scored.sort_by(|a, b| b.cmp(a));
                    scored.truncate(cap);
                    *list = scored.into_iter().map(|c| c.id).collect();
                }
            }
            self.links[node as usize][lev] = chosen;
            eps = found.iter().map(|c| c.id).collect();
        }
        if level > self.top_level {
            self.top_level = level;
            self.entry = Some(node);
        }
    }

    /// Best-first beam search on one layer; results sorted by similarity, best first.
    fn search_layer(
        &self,
        vectors: &[f64],
        dim: usize,
        q: &[f64],
        entry_points: &[u32],
        ef: usize,
        level: usize,
    ) -> Vec<Cand> {
        let mut visited: HashSet<u32> = entry_points.iter().copied().collect();
        let mut frontier = BinaryHeap::new();
        let mut results: BinaryHeap<std::cmp::Reverse<Cand>> = BinaryHeap::new();
        for &ep in entry_points {
            let c = Cand {
                sim: dot(q, row(vectors, dim, ep)),
                id: ep,
            };
            frontier.push(c);
            results.push(std::cmp::Reverse(c));
            if results.len() > ef {
                results.pop();
            }
        }
        while let Some(c) = frontier.pop() {
            let worst = results.peek().map(|r| r.0.sim).unwrap_or(f64::NEG_INFINITY);
            if results.len() >= ef && c.sim < worst {
                break;
            }
            let Some(neighbours) = self.links[c.id as usize].get(level) else {
                continue;
            };
            for &nb in neighbours {
                if !visited.insert(nb) {
                    continue;
                }
                let sim = dot(q, row(vectors, dim, nb));
                let worst = results.peek().map(|r| r.0.sim).unwrap_or(f64::NEG_INFINITY);
                if results.len() < ef || sim > worst {
                    let cand = Cand { sim, id: nb };
                    frontier.push(cand);
                    results.push(std::cmp::Reverse(cand));
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
        let mut out: Vec<Cand> = results.into_iter().map(|r| r.0).collect();
        out.sort_by(|a, b| b.cmp(a));
        out
    }

    /// Approximate top-`k` `(node, similarity)` pairs with beam width `ef`.
    pub fn search(
        &self,
        vectors: &[f64],
        dim: usize,
        q: &[f64],
        k: usize,
        ef: usize,
    ) -> Vec<(u32, f64)> {
        let Some(entry) = self.entry else {
            return Vec::new();
        };
        let mut eps = vec![entry];
        for lev in (1..=self.top_level).rev() {
            let best = self.search_layer(vectors, dim, q, &eps, 1, lev);
            eps = vec![best[0].id];
        }
        self.search_layer(vectors, dim, q, &eps, ef.max(k), 0)
            .into_iter()
            .take(k)
            .map(|c| (c.id, c.sim))
            .collect()
    }
}

fn row(vectors: &[f64], dim: usize, id: u32) -> &[f64] {
    let start = id as usize * dim;
    &vectors[start..start + dim]
}
