//! Deterministic augmentation over full neighborhoods.
//!
//! An augmenting trail alternates non-matching and matching pairs, starts
//! and ends on a non-matching pair, uses no pair twice and has deficient
//! ends. A breadth-first search over `(vertex, parity)` states finds every
//! end reachable by an alternating walk. Walk reachability contains trail
//! reachability, so when the search meets no deficient end there is no
//! augmenting trail. When every walk it reconstructs repeats a pair, a
//! depth-first enumeration of trails settles the question within a budget.

use super::{Adjacency, AugmentError};
use crate::matching::KMatching;
use std::collections::{HashSet, VecDeque};

/// Trail steps the depth-first search may take per call.
pub const DEFAULT_TRAIL_BUDGET: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TrailSearch {
    Found(Vec<usize>),
    /// No augmenting trail exists.
    None,
    /// The depth-first search ran out of budget.
    BudgetExhausted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExhaustiveReport {
    pub augmentations: usize,
    /// `false` when a search ran out of budget; the result is then maximal
    /// only up to the searched trails.
    pub complete: bool,
}

const UNSEEN: u32 = u32::MAX;

fn endpoint_ok(m: &KMatching, start: usize, end: usize) -> bool {
    m.deficiency(end) >= if end == start { 2 } else { 1 }
}

/// Searches for one augmenting trail avoiding `excluded`.
#[must_use]
pub fn find_augmenting_trail(adj: &Adjacency, m: &KMatching, excluded: Option<usize>, budget: usize) -> TrailSearch {
    let n = adj.n();
    // A deficient vertex without an unmatched neighbor can end no trail.
    let roots: Vec<usize> = m
        .deficient_vertices()
        .filter(|&v| Some(v) != excluded)
        .filter(|&v| adj.neighbors(v).iter().any(|&y| Some(y as usize) != excluded && !m.contains(v, y as usize)))
        .collect();
    if roots.iter().map(|&v| m.deficiency(v)).sum::<usize>() < 2 {
        return TrailSearch::None;
    }
    // State 2v: at v, next pair unmatched. State 2v + 1: next pair matched.
    let mut parent = vec![UNSEEN; 2 * n];
    let mut queue = VecDeque::new();
    for &r in &roots {
        parent[2 * r] = 2 * r as u32;
        queue.push_back(2 * r);
    }
    let mut saw_end = false;
    while let Some(s) = queue.pop_front() {
        let x = s / 2;
        if s % 2 == 0 {
            for &y in adj.neighbors(x) {
                let y = y as usize;
                if Some(y) == excluded || m.contains(x, y) {
                    continue;
                }
                if m.degree(y) < m.k() {
                    saw_end = true;
                    let mut walk = walk_to(&parent, s);
                    walk.push(y);
                    if endpoint_ok(m, walk[0], y) && m.check_augmenting(&walk).is_ok() {
                        return TrailSearch::Found(walk);
                    }
                }
                let t = 2 * y + 1;
                if parent[t] == UNSEEN {
                    parent[t] = s as u32;
                    queue.push_back(t);
                }
            }
        } else {
            for &y in m.partners(x) {
                let y = y as usize;
                let t = 2 * y;
                if parent[t] == UNSEEN {
                    parent[t] = s as u32;
                    queue.push_back(t);
                }
            }
        }
    }
    if !saw_end {
        return TrailSearch::None;
    }
    trail_dfs(adj, m, &roots, excluded, budget)
}

fn walk_to(parent: &[u32], mut s: usize) -> Vec<usize> {
    let mut walk = vec![s / 2];
    while parent[s] as usize != s {
        s = parent[s] as usize;
        walk.push(s / 2);
    }
    walk.reverse();
    walk
}

fn pair(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

fn trail_dfs(adj: &Adjacency, m: &KMatching, roots: &[usize], excluded: Option<usize>, budget: usize) -> TrailSearch {
    let mut steps = 0usize;
    let options = |x: usize, matched: bool| -> Vec<usize> {
        if matched {
            m.partners(x).iter().map(|&y| y as usize).collect()
        } else {
            adj.neighbors(x)
                .iter()
                .map(|&y| y as usize)
                .filter(|&y| Some(y) != excluded && !m.contains(x, y))
                .collect()
        }
    };
    for &a in roots {
        let mut trail = vec![a];
        let mut used: HashSet<(usize, usize)> = HashSet::new();
        let mut stack: Vec<(Vec<usize>, usize)> = vec![(options(a, false), 0)];
        while let Some((cands, next)) = stack.last_mut() {
            if *next == cands.len() {
                stack.pop();
                if trail.len() > 1 {
                    let y = trail.pop().expect("trail is nonempty");
                    used.remove(&pair(*trail.last().expect("trail keeps its root"), y));
                }
                continue;
            }
            let y = cands[*next];
            *next += 1;
            let x = *trail.last().expect("trail keeps its root");
            if used.contains(&pair(x, y)) {
                continue;
            }
            steps += 1;
            if steps > budget {
                return TrailSearch::BudgetExhausted;
            }
            // The pair just taken is unmatched when the trail has odd length
            // after it.
            let unmatched = trail.len() % 2 == 1;
            if unmatched && endpoint_ok(m, a, y) {
                trail.push(y);
                return TrailSearch::Found(trail);
            }
            used.insert(pair(x, y));
            trail.push(y);
            stack.push((options(y, unmatched), 0));
        }
    }
    TrailSearch::None
}

/// Augments `m` along trails until none is left.
pub fn exhaustive_augment(
    adj: &Adjacency,
    m: &mut KMatching,
    excluded: Option<usize>,
    budget: usize,
) -> Result<ExhaustiveReport, AugmentError> {
    let mut report = ExhaustiveReport { augmentations: 0, complete: true };
    loop {
        match find_augmenting_trail(adj, m, excluded, budget) {
            TrailSearch::Found(trail) => {
                m.apply_augmenting_path(&trail)?;
                report.augmentations += 1;
            }
            TrailSearch::None => return Ok(report),
            TrailSearch::BudgetExhausted => {
                report.complete = false;
                return Ok(report);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MultiGraph;
    use crate::oracle::brute_force_max_k_matching;
    use rand::{Rng, SeedableRng};

    fn max_size(n: usize, pairs: &[(usize, usize)], k: usize) -> usize {
        let g = MultiGraph::from_edge_list(n, pairs).unwrap();
        let adj = Adjacency::from_graph(&g);
        let mut m = KMatching::new(n, k);
        let r = exhaustive_augment(&adj, &mut m, None, DEFAULT_TRAIL_BUDGET).unwrap();
        assert!(r.complete);
        m.size()
    }

    #[test]
    fn triangle_and_k4() {
        assert_eq!(max_size(3, &[(0, 1), (1, 2), (2, 0)], 1), 1);
        let k4 = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        assert_eq!(max_size(4, &k4, 2), 4);
    }

    #[test]
    fn blossom_needs_a_trail() {
        // Two triangles joined by a path: k = 1 matching with an odd cycle
        // between the free vertices.
        let pairs = [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 6), (6, 4)];
        assert_eq!(max_size(7, &pairs, 1), 3);
        let mut m = KMatching::from_pairs(7, 1, &[(1, 2), (3, 4), (5, 6)]).unwrap();
        let adj = Adjacency::from_graph(&MultiGraph::from_edge_list(7, &pairs).unwrap());
        assert_eq!(find_augmenting_trail(&adj, &m, None, 1000), TrailSearch::None);
        m.remove(3, 4).unwrap();
        assert!(matches!(find_augmenting_trail(&adj, &m, None, 1000), TrailSearch::Found(_)));
    }

    #[test]
    fn lone_open_end_has_no_trail() {
        // 3 is stuck behind its only neighbor; 0 alone has spare capacity.
        let pairs = [(0, 1), (1, 2), (2, 0), (2, 3)];
        let adj = Adjacency::from_graph(&MultiGraph::from_edge_list(4, &pairs).unwrap());
        let m = KMatching::from_pairs(4, 2, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(find_augmenting_trail(&adj, &m, None, 0), TrailSearch::None);
    }

    #[test]
    fn excluded_vertex_is_never_matched() {
        let k4 = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let adj = Adjacency::from_graph(&MultiGraph::from_edge_list(4, &k4).unwrap());
        let mut m = KMatching::new(4, 2);
        exhaustive_augment(&adj, &mut m, Some(3), DEFAULT_TRAIL_BUDGET).unwrap();
        assert_eq!(m.degree(3), 0);
        assert_eq!(m.size(), 3);
    }

    #[test]
    fn agrees_with_brute_force_on_small_multigraphs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..150 {
            let n = rng.gen_range(1..=8);
            let m = rng.gen_range(0..=12);
            let k = rng.gen_range(1..=3);
            let pairs: Vec<(usize, usize)> = (0..m).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
            let g = MultiGraph::from_edge_list(n, &pairs).unwrap();
            let want = brute_force_max_k_matching(&g, k).unwrap().optimum;
            assert_eq!(max_size(n, &pairs, k), want, "pairs {pairs:?} k {k}");
        }
    }
}
