//! Skill-disjoint train/dev/test assignment.
//!
//! Queries are placed greedily, largest skill set first. Each goes to the
//! unfilled split where it adds the least shared vocabulary: the split with
//! the lowest Jaccard overlap between the query and the skills already in
//! the other splits. Ties prefer the split already holding more of the
//! query's skills, then the emptier split, then train, dev, test order.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

/// Assigns each skill set to a split. `sizes` must sum to `sets.len()`.
pub fn split_skill_disjoint<T: Ord + Clone>(sets: &[BTreeSet<T>], sizes: [usize; 3]) -> Vec<Split> {
    assert_eq!(
        sizes.iter().sum::<usize>(),
        sets.len(),
        "split sizes must cover every query"
    );
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(sets[i].len()));
    let mut acc: [BTreeSet<T>; 3] = Default::default();
    let mut counts = [0usize; 3];
    let mut out = vec![Split::Train; sets.len()];
    for i in order {
        let q = &sets[i];
        let best = (0..3)
            .filter(|&s| counts[s] < sizes[s])
            .min_by(|&a, &b| {
                let key = |s: usize| {
                    let others: BTreeSet<T> = (0..3)
                        .filter(|&t| t != s)
                        .flat_map(|t| acc[t].iter().cloned())
                        .collect();
                    let own = q.intersection(&acc[s]).count();
                    (jaccard(q, &others), own, counts[s] as f64 / sizes[s] as f64)
                };
                let (ca, oa, fa) = key(a);
                let (cb, ob, fb) = key(b);
                ca.total_cmp(&cb)
                    .then(ob.cmp(&oa))
                    .then(fa.total_cmp(&fb))
                    .then(a.cmp(&b))
            })
            .expect("sizes cover every query");
        acc[best].extend(q.iter().cloned());
        counts[best] += 1;
        out[i] = Split::ALL[best];
    }
    out
}

fn union_of<T: Ord + Clone>(
    sets: &[BTreeSet<T>],
    assignment: &[Split],
    split: Split,
) -> BTreeSet<T> {
    sets.iter()
        .zip(assignment)
        .filter(|(_, s)| **s == split)
        .flat_map(|(q, _)| q.iter().cloned())
        .collect()
}

/// Fraction of test-split skills that never occur in the train split.
pub fn unseen_fraction<T: Ord + Clone>(sets: &[BTreeSet<T>], assignment: &[Split]) -> f64 {
    let train = union_of(sets, assignment, Split::Train);
    let test = union_of(sets, assignment, Split::Test);
    if test.is_empty() {
        return 0.0;
    }
    test.difference(&train).count() as f64 / test.len() as f64
}

/// Sum over split pairs of shared skills.
pub fn cross_split_overlap<T: Ord + Clone>(sets: &[BTreeSet<T>], assignment: &[Split]) -> usize {
    let u = Split::ALL.map(|s| union_of(sets, assignment, s));
    u[0].intersection(&u[1]).count()
        + u[0].intersection(&u[2]).count()
        + u[1].intersection(&u[2]).count()
}

/// Minimal cross-split overlap over every assignment with the given sizes.
pub fn exhaustive_min_overlap<T: Ord + Clone>(
    sets: &[BTreeSet<T>],
    sizes: [usize; 3],
) -> (usize, Vec<Vec<Split>>) {
    fn go<T: Ord + Clone>(
        i: usize,
        sets: &[BTreeSet<T>],
        left: &mut [usize; 3],
        cur: &mut Vec<Split>,
        best: &mut (usize, Vec<Vec<Split>>),
    ) {
        if i == sets.len() {
            let v = cross_split_overlap(sets, cur);
            if v < best.0 {
                *best = (v, vec![cur.clone()]);
            } else if v == best.0 {
                best.1.push(cur.clone());
            }
            return;
        }
        for s in 0..3 {
            if left[s] > 0 {
                left[s] -= 1;
                cur.push(Split::ALL[s]);
                go(i + 1, sets, left, cur, best);
                cur.pop();
                left[s] += 1;
            }
        }
    }
    let mut best = (usize::MAX, Vec::new());
    go(0, sets, &mut sizes.clone(), &mut Vec::new(), &mut best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(v: &[&[&str]]) -> Vec<BTreeSet<String>> {
        v.iter()
            .map(|s| s.iter().map(|x| x.to_string()).collect())
            .collect()
    }

    #[test]
    fn disjoint_singletons_are_fully_unseen() {
        let s = sets(&[&["a"], &["b"], &["c"]]);
        let a = split_skill_disjoint(&s, [1, 1, 1]);
        assert_eq!(unseen_fraction(&s, &a), 1.0);
    }

    #[test]
    fn six_query_fixture_matches_exhaustive_optimum() {
        let s = sets(&[
            &["sql", "tableau", "excel"],
            &["kubernetes", "docker", "terraform"],
            &["sql", "excel"],
            &["react", "css", "html"],
            &["docker", "linux"],
            &["react", "typescript"],
        ]);
        let greedy = split_skill_disjoint(&s, [2, 2, 2]);
        let (best, optima) = exhaustive_min_overlap(&s, [2, 2, 2]);
        assert_eq!(cross_split_overlap(&s, &greedy), best);
        assert!(optima.contains(&greedy));
        assert_eq!(best, 0);
    }

    #[test]
    fn sizes_are_respected() {
        let s = sets(&[&["a", "b"], &["a"], &["b"], &["c"], &["a", "c"], &["d"]]);
        let a = split_skill_disjoint(&s, [3, 2, 1]);
        for (split, n) in Split::ALL.iter().zip([3, 2, 1]) {
            assert_eq!(a.iter().filter(|x| *x == split).count(), n);
        }
    }
}
