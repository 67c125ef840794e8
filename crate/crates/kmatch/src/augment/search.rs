//! One tree search: grow a short tree, move the deficiency to a random leaf
//! by flipping the path to it, and grow a tall tree from that leaf.

use super::tree::{AlternatingTree, EdgeSupply};
use super::{Adjacency, AugmentError, AugmentParams};
use crate::matching::KMatching;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashSet;

/// Inputs of one search besides the matching.
#[derive(Clone, Copy, Debug)]
pub struct TreeRequest<'a> {
    pub root: usize,
    /// Used vertices; they do not count toward the size test.
    pub used: &'a [bool],
    /// The first `avoid_depth` levels of the tall tree must miss this set.
    pub avoid: &'a HashSet<usize>,
    /// The flip path must miss this set.
    pub avoid_path: &'a HashSet<usize>,
}

/// Successful search. The matching is left in the state the tree refers to:
/// the input matching with `flip` toggled.
#[derive(Clone, Debug)]
pub enum TreeOutcome {
    /// `path` augments the current matching.
    Augmenting { path: Vec<usize>, flip: Vec<usize> },
    /// A tall tree rooted at the last vertex of `flip` (or at the request
    /// root when `flip` is empty) that passed the size and avoidance tests.
    Grown { tree: AlternatingTree, flip: Vec<usize> },
}

impl TreeOutcome {
    #[must_use]
    pub fn flip(&self) -> &[usize] {
        match self {
            Self::Augmenting { flip, .. } | Self::Grown { flip, .. } => flip,
        }
    }
}

/// Runs up to `params.attempts` attempts and returns `None` when all fail.
/// On `None` the matching is restored.
pub fn generate_tree<R: Rng + ?Sized>(
    req: TreeRequest<'_>,
    m: &mut KMatching,
    adj: &Adjacency,
    supply: &mut EdgeSupply,
    params: &AugmentParams,
    rng: &mut R,
) -> Result<Option<TreeOutcome>, AugmentError> {
    let w = req.root;
    for _ in 0..params.attempts {
        let mut tall = AlternatingTree::grow(w, m, params.l1, adj, supply, rng)?;
        tall.extend(2 * (params.l1 + params.ext), m, adj, supply, rng);
        if let Some(y) = tall.deficient_odd(m) {
            let path = tall.path_to(y).expect("vertex is in the tree");
            return Ok(Some(TreeOutcome::Augmenting { path, flip: Vec::new() }));
        }
        let leaves: Vec<usize> = tall.level(2 * params.l1).collect();
        let Some(&leaf) = leaves.choose(rng) else { continue };
        let flip = tall.path_to(leaf).expect("leaf is in the tree");
        m.toggle_walk(&flip)?;
        supply.record_flip(&flip);

        let mut tree = tall.subtree(leaf).expect("leaf is in the tree");
        tree.extend(2 * params.l2, m, adj, supply, rng);
        if let Some(y) = tree.deficient_odd(m) {
            let path = tree.path_to(y).expect("vertex is in the tree");
            return Ok(Some(TreeOutcome::Augmenting { path, flip }));
        }
        let fresh = tree.even_vertices().filter(|&v| !req.used[v]).count();
        let clear = tree.first_levels(params.avoid_depth).is_disjoint(req.avoid);
        let path_clear = flip.iter().all(|v| !req.avoid_path.contains(v));
        if fresh >= params.size_threshold && clear && path_clear {
            return Ok(Some(TreeOutcome::Grown { tree, flip }));
        }
        m.toggle_walk(&flip)?;
        supply.record_flip(&flip);
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MultiGraph;
    use crate::rng::stream;

    #[test]
    fn empty_matching_augments_at_once() {
        let g = MultiGraph::from_edge_list(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)]).unwrap();
        let adj = Adjacency::from_graph(&g);
        let mut m = KMatching::new(4, 2);
        let mut supply = EdgeSupply::new(4, 2);
        let params = AugmentParams::for_size(4, 2);
        let none = HashSet::new();
        let used = vec![false; 4];
        let req = TreeRequest { root: 0, used: &used, avoid: &none, avoid_path: &none };
        let out = generate_tree(req, &mut m, &adj, &mut supply, &params, &mut stream(1, "t")).unwrap();
        match out {
            Some(TreeOutcome::Augmenting { path, flip }) => {
                assert_eq!(path.len(), 2);
                assert!(flip.is_empty());
            }
            other => panic!("expected an augmenting path, got {other:?}"),
        }
    }

    #[test]
    fn failure_restores_matching() {
        // A perfect 1-matching of a 6-cycle plus a pendant root: no tree from
        // the root can reach the size threshold.
        let pairs = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (6, 0)];
        let g = MultiGraph::from_edge_list(7, &pairs).unwrap();
        let adj = Adjacency::from_graph(&g);
        let mut m = KMatching::from_pairs(7, 1, &[(0, 1), (2, 3), (4, 5)]).unwrap();
        let before = m.pairs();
        let mut supply = EdgeSupply::new(7, 1);
        let mut params = AugmentParams::for_size(7, 1);
        params.size_threshold = 100;
        params.attempts = 5;
        let none = HashSet::new();
        let used = vec![false; 7];
        let req = TreeRequest { root: 6, used: &used, avoid: &none, avoid_path: &none };
        let out = generate_tree(req, &mut m, &adj, &mut supply, &params, &mut stream(2, "t")).unwrap();
        assert!(out.is_none());
        assert_eq!(m.pairs(), before);
    }
}
