//! Reference implementations used to validate the fast paths: exhaustive
//! maximum k-matching on tiny graphs, validity checks for k-matchings and
//! k-factors, and a naive k-core fixpoint.
//!
//! Matchings are sets of distinct vertex pairs: parallel copies of an edge
//! can be matched at most once and loops never.

use crate::graph::MultiGraph;
use std::collections::HashSet;
use thiserror::Error;

/// Largest number of distinct non-loop pairs the enumeration accepts.
pub const MAX_ORACLE_PAIRS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{pairs} distinct pairs exceed the enumeration limit of {MAX_ORACLE_PAIRS}")]
    TooLarge { pairs: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub optimum: usize,
    /// A maximum k-matching, pairs sorted with `u < v`.
    pub witness: Vec<(usize, usize)>,
    /// Search nodes visited.
    pub explored: u64,
}

/// Maximum k-matching by branch and bound over the distinct pairs of `g`.
///
/// Pairs are decided in index order with a running degree vector. A branch
/// is cut when the pairs still undecided, or half the remaining capacity,
/// cannot beat the incumbent.
pub fn brute_force_max_k_matching(g: &MultiGraph, k: usize) -> Result<OracleResult, OracleError> {
    let pairs = distinct_pairs(g);
    if pairs.len() > MAX_ORACLE_PAIRS {
        return Err(OracleError::TooLarge { pairs: pairs.len() });
    }
    let mut search = Search {
        pairs: &pairs,
        k,
        deg: vec![0; g.n()],
        chosen: Vec::new(),
        best: Vec::new(),
        explored: 0,
        mark: vec![0; g.n()],
        epoch: 0,
    };
    search.run(0);
    let mut witness: Vec<(usize, usize)> = search.best.iter().map(|&i| pairs[i]).collect();
    witness.sort_unstable();
    Ok(OracleResult { optimum: witness.len(), witness, explored: search.explored })
}

fn distinct_pairs(g: &MultiGraph) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = g
        .edges()
        .filter(|&(_, u, v)| u != v)
        .map(|(_, u, v)| (u.min(v), u.max(v)))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

struct Search<'a> {
    pairs: &'a [(usize, usize)],
    k: usize,
    deg: Vec<usize>,
    chosen: Vec<usize>,
    best: Vec<usize>,
    explored: u64,
    mark: Vec<u64>,
    epoch: u64,
}

impl Search<'_> {
    fn run(&mut self, i: usize) {
        self.explored += 1;
        if self.chosen.len() > self.best.len() {
            self.best.clone_from(&self.chosen);
        }
        if i == self.pairs.len() {
            return;
        }
        let remaining = self.pairs.len() - i;
        self.epoch += 1;
        let mut capacity = 0;
        for &(u, v) in &self.pairs[i..] {
            for x in [u, v] {
                if self.mark[x] != self.epoch {
                    self.mark[x] = self.epoch;
                    capacity += self.k - self.deg[x];
                }
            }
        }
        if self.chosen.len() + remaining.min(capacity / 2) <= self.best.len() {
            return;
        }
        let (u, v) = self.pairs[i];
        if self.deg[u] < self.k && self.deg[v] < self.k {
            self.deg[u] += 1;
            self.deg[v] += 1;
            self.chosen.push(i);
            self.run(i + 1);
            self.chosen.pop();
            self.deg[u] -= 1;
            self.deg[v] -= 1;
        }
        self.run(i + 1);
    }
}

/// First reason a pair set fails to be a k-matching or k-factor.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Violation {
    #[error("vertex {0} out of range")]
    OutOfRange(usize),
    #[error("loop at vertex {0}")]
    Loop(usize),
    #[error("pair {{{0}, {1}}} is not an edge of the graph")]
    NotAnEdge(usize, usize),
    #[error("pair {{{0}, {1}}} appears twice")]
    Duplicate(usize, usize),
    #[error("vertex {vertex} has matched degree {degree}, above k")]
    Oversaturated { vertex: usize, degree: usize },
    #[error("vertex {vertex} has matched degree {degree}, below k")]
    Unsaturated { vertex: usize, degree: usize },
    #[error("excluded vertex {vertex} has matched degree {degree}")]
    ExcludedMatched { vertex: usize, degree: usize },
}

/// Matched degree of every vertex after checking that `pairs` is a
/// k-matching of `g`.
fn matched_degrees(g: &MultiGraph, pairs: &[(usize, usize)], k: usize) -> Result<Vec<usize>, Violation> {
    let available: HashSet<(usize, usize)> = distinct_pairs(g).into_iter().collect();
    let mut seen = HashSet::with_capacity(pairs.len());
    let mut deg = vec![0; g.n()];
    for &(u, v) in pairs {
        for x in [u, v] {
            if x >= g.n() {
                return Err(Violation::OutOfRange(x));
            }
        }
        if u == v {
            return Err(Violation::Loop(u));
        }
        let key = (u.min(v), u.max(v));
        if !available.contains(&key) {
            return Err(Violation::NotAnEdge(u, v));
        }
        if !seen.insert(key) {
            return Err(Violation::Duplicate(u, v));
        }
        deg[u] += 1;
        deg[v] += 1;
    }
    if let Some(v) = (0..g.n()).find(|&v| deg[v] > k) {
        return Err(Violation::Oversaturated { vertex: v, degree: deg[v] });
    }
    Ok(deg)
}

/// Checks that `pairs` are distinct edges of `g` with every matched degree at
/// most `k`.
pub fn verify_k_matching(g: &MultiGraph, pairs: &[(usize, usize)], k: usize) -> Result<(), Violation> {
    matched_degrees(g, pairs, k).map(drop)
}

/// Checks that `pairs` is a k-factor of `g`, or of `g - exclude` when a
/// vertex is excluded; the excluded vertex must then be unmatched.
pub fn verify_k_factor(
    g: &MultiGraph,
    pairs: &[(usize, usize)],
    k: usize,
    exclude: Option<usize>,
) -> Result<(), Violation> {
    let deg = matched_degrees(g, pairs, k)?;
    for (v, &d) in deg.iter().enumerate() {
        if Some(v) == exclude {
            if d != 0 {
                return Err(Violation::ExcludedMatched { vertex: v, degree: d });
            }
        } else if d != k {
            return Err(Violation::Unsaturated { vertex: v, degree: d });
        }
    }
    Ok(())
}

/// The k-core by repeated full scans: delete every vertex of degree below `k`
/// until none is left. Returns the surviving vertices in increasing order.
#[must_use]
pub fn naive_k_core(g: &MultiGraph, k: usize) -> Vec<usize> {
    let edges = g.edge_list();
    let mut alive = vec![true; g.n()];
    loop {
        let mut deg = vec![0usize; g.n()];
        for &(u, v) in &edges {
            if alive[u] && alive[v] {
                deg[u] += 1;
                deg[v] += 1;
            }
        }
        let doomed: Vec<usize> = (0..g.n()).filter(|&v| alive[v] && deg[v] < k).collect();
        if doomed.is_empty() {
            break;
        }
        for v in doomed {
            alive[v] = false;
        }
    }
    (0..g.n()).filter(|&v| alive[v]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> MultiGraph {
        let pairs: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        MultiGraph::from_edge_list(n, &pairs).unwrap()
    }

    #[test]
    fn empty_graph_has_optimum_zero() {
        let r = brute_force_max_k_matching(&MultiGraph::new(5), 2).unwrap();
        assert_eq!(r.optimum, 0);
        assert!(r.witness.is_empty());
    }

    #[test]
    fn triangle_with_k_one() {
        let r = brute_force_max_k_matching(&complete(3), 1).unwrap();
        assert_eq!(r.optimum, 1);
    }

    #[test]
    fn k4_two_matching_is_a_four_cycle() {
        let g = complete(4);
        let r = brute_force_max_k_matching(&g, 2).unwrap();
        assert_eq!(r.optimum, 4);
        verify_k_factor(&g, &r.witness, 2, None).unwrap();
    }

    #[test]
    fn parallel_edges_count_once() {
        let g = MultiGraph::from_edge_list(2, &[(0, 1), (0, 1), (1, 1)]).unwrap();
        assert_eq!(brute_force_max_k_matching(&g, 3).unwrap().optimum, 1);
    }

    #[test]
    fn too_many_pairs_is_rejected() {
        assert_eq!(brute_force_max_k_matching(&complete(8), 2), Err(OracleError::TooLarge { pairs: 28 }));
    }

    #[test]
    fn empty_matching_is_valid_but_not_a_factor() {
        let g = complete(4);
        verify_k_matching(&g, &[], 2).unwrap();
        assert_eq!(verify_k_factor(&g, &[], 2, None), Err(Violation::Unsaturated { vertex: 0, degree: 0 }));
    }

    #[test]
    fn reports_foreign_pair() {
        let g = MultiGraph::from_edge_list(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(verify_k_matching(&g, &[(0, 1), (1, 2)], 2), Err(Violation::NotAnEdge(1, 2)));
        assert_eq!(verify_k_matching(&g, &[(0, 1), (1, 0)], 2), Err(Violation::Duplicate(1, 0)));
        assert_eq!(verify_k_matching(&g, &[(0, 0)], 2), Err(Violation::Loop(0)));
    }

    #[test]
    fn excluded_vertex_must_be_free() {
        // Triangle plus a pendant vertex 3 attached to 0; k = 1 leaves the
        // pendant's partner choice open.
        let g = MultiGraph::from_edge_list(4, &[(0, 1), (1, 2), (2, 0), (0, 3)]).unwrap();
        verify_k_factor(&g, &[(1, 2), (0, 3)], 1, None).unwrap();
        assert_eq!(
            verify_k_factor(&g, &[(1, 2), (0, 3)], 1, Some(3)),
            Err(Violation::ExcludedMatched { vertex: 3, degree: 1 })
        );
    }

    #[test]
    fn naive_core_examples() {
        let path = MultiGraph::from_edge_list(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        assert!(naive_k_core(&path, 2).is_empty());
        let cycle = MultiGraph::from_edge_list(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        assert_eq!(naive_k_core(&cycle, 2), vec![0, 1, 2, 3, 4]);
        let k4e = MultiGraph::from_edge_list(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        assert_eq!(naive_k_core(&k4e, 2), vec![0, 1, 2, 3]);
    }
}
