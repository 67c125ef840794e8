//! The augmentation loop: two tree searches per iteration and, when both
//! trees grow large, one reserved pair between their even levels.

use super::exhaustive::{find_augmenting_trail, TrailSearch};
use super::search::{generate_tree, TreeOutcome, TreeRequest};
use super::tree::{AlternatingTree, EdgeSupply};
use super::{Adjacency, AugmentError, AugmentParams, ReservedEdges};
use crate::matching::KMatching;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use std::collections::{HashSet, VecDeque};

/// Counters of one augmentation run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AugmentStats {
    pub iterations: usize,
    /// Augmenting paths found inside a tree.
    pub tree_paths: usize,
    /// Augmenting paths closed by a pair between two trees.
    pub rectangle_paths: usize,
    /// Of those, pairs that came from the reserve.
    pub reserve_pairs_used: usize,
    /// Single-deficient-vertex swaps.
    pub swaps: usize,
    /// Calls of the tree search, and how many of them failed.
    pub tree_searches: usize,
    pub tree_failures: usize,
    pub rectangle_misses: usize,
    pub fallback_steps: usize,
    pub fallback_paths: usize,
    /// Reserved pairs consumed by inspected rectangles.
    pub reserve_discarded: usize,
    pub oversized_rectangles: usize,
    pub used_resets: usize,
    pub trail_budget_exhausted: bool,
}

impl AugmentStats {
    /// Fraction of iterations that ended in an exhaustive step.
    #[must_use]
    pub fn fallback_rate(&self) -> f64 {
        if self.iterations == 0 {
            0.0
        } else {
            self.fallback_steps as f64 / self.iterations as f64
        }
    }
}

#[derive(Clone, Debug)]
pub struct PoolReport {
    pub matching: KMatching,
    pub stats: AugmentStats,
    /// Every vertex except the excluded one is saturated.
    pub perfect: bool,
    /// Reserved pairs never inspected.
    pub reserve_left: usize,
}

/// Reserved pairs with per-vertex lookup and removal.
struct Pool {
    pairs: Vec<(u32, u32)>,
    alive: Vec<bool>,
    at: Vec<Vec<u32>>,
    live: usize,
}

impl Pool {
    fn new(n: usize, pairs: &[(usize, usize)], excluded: Option<usize>) -> Self {
        let mut pool = Self { pairs: Vec::new(), alive: Vec::new(), at: vec![Vec::new(); n], live: 0 };
        for &(u, v) in pairs {
            if u == v || Some(u) == excluded || Some(v) == excluded {
                continue;
            }
            let id = pool.pairs.len() as u32;
            pool.pairs.push((u as u32, v as u32));
            pool.alive.push(true);
            pool.at[u].push(id);
            pool.at[v].push(id);
            pool.live += 1;
        }
        pool
    }

    fn remove(&mut self, id: u32) -> (usize, usize) {
        debug_assert!(self.alive[id as usize]);
        self.alive[id as usize] = false;
        self.live -= 1;
        let (u, v) = self.pairs[id as usize];
        (u as usize, v as usize)
    }

    fn other(&self, id: u32, v: usize) -> usize {
        let (a, b) = self.pairs[id as usize];
        if a as usize == v {
            b as usize
        } else {
            a as usize
        }
    }
}

struct Augmenter<'a> {
    adj: Adjacency,
    pool: Pool,
    supply: EdgeSupply,
    used: Vec<bool>,
    used_count: usize,
    initial_used: &'a [bool],
    initial_count: usize,
    excluded: Option<usize>,
    params: &'a AugmentParams,
    stats: AugmentStats,
}

/// Pool pairs and graph pairs that join the two trees' admissible even
/// levels, plus the first such pair that closes an augmenting trail.
struct Rectangle {
    reserve_hits: Vec<u32>,
    path: Option<(Vec<usize>, Option<u32>)>,
}

impl Augmenter<'_> {
    fn deficient(&self, m: &KMatching) -> Vec<usize> {
        m.deficient_vertices().filter(|&v| Some(v) != self.excluded).collect()
    }

    /// Vertices reachable from `u` along supply pairs in at most
    /// `ball_radius` steps.
    fn ball<R: Rng + ?Sized>(&mut self, m: &KMatching, u: usize, rng: &mut R) -> HashSet<usize> {
        let mut seen = HashSet::from([u]);
        let mut queue = VecDeque::from([(u, 0usize)]);
        while let Some((x, d)) = queue.pop_front() {
            if d == self.params.ball_radius {
                continue;
            }
            for y in self.supply.get(&self.adj, m, x, rng).to_vec() {
                if seen.insert(y as usize) {
                    queue.push_back((y as usize, d + 1));
                }
            }
        }
        seen
    }

    /// Swaps a pair into a lone deficient vertex `v` so that a second
    /// deficient vertex appears. Returns it, or `None` when `v` has no
    /// unmatched neighbor. A neighbor with spare capacity is matched
    /// directly, which finishes the iteration.
    fn swap<R: Rng + ?Sized>(&mut self, m: &mut KMatching, v: usize, rng: &mut R) -> Result<Swap, AugmentError> {
        let free: Vec<usize> = self
            .adj
            .neighbors(v)
            .iter()
            .map(|&y| y as usize)
            .filter(|&y| Some(y) != self.excluded && !m.contains(v, y))
            .collect();
        if let Some(&y) = free.iter().find(|&&y| m.degree(y) < m.k()) {
            m.insert(v, y)?;
            return Ok(Swap::Augmented);
        }
        let Some(&y) = free.choose(rng) else { return Ok(Swap::Stuck) };
        let x = *m.partners(y).choose(rng).expect("saturated vertex has partners") as usize;
        m.remove(y, x)?;
        m.insert(v, y)?;
        self.stats.swaps += 1;
        Ok(Swap::Partner(x))
    }

    fn search<R: Rng + ?Sized>(
        &mut self,
        m: &mut KMatching,
        root: usize,
        avoid: &HashSet<usize>,
        avoid_path: &HashSet<usize>,
        rng: &mut R,
    ) -> Result<Option<TreeOutcome>, AugmentError> {
        self.stats.tree_searches += 1;
        let req = TreeRequest { root, used: &self.used, avoid, avoid_path };
        generate_tree(req, m, &self.adj, &mut self.supply, self.params, rng)
    }

    fn undo(&mut self, m: &mut KMatching, flip: &[usize]) -> Result<(), AugmentError> {
        m.toggle_walk(flip)?;
        self.supply.record_flip(flip);
        Ok(())
    }

    fn augment(&mut self, m: &mut KMatching, path: &[usize], before: usize) -> Result<(), AugmentError> {
        m.apply_augmenting_path(path)?;
        if m.size() != before + 1 {
            return Err(AugmentError::Invariant {
                stage: "augmentation",
                detail: format!("size went from {before} to {}", m.size()),
            });
        }
        Ok(())
    }

    /// One iteration; `true` when the matching grew.
    fn iterate<R: Rng + ?Sized>(&mut self, m: &mut KMatching, deficient: &[usize], rng: &mut R) -> Result<bool, AugmentError> {
        let before = m.size();
        self.supply.renew();
        let (v, u) = if deficient.len() >= 2 {
            let pick: Vec<usize> = deficient.choose_multiple(rng, 2).copied().collect();
            (pick[0], pick[1])
        } else {
            let v = deficient[0];
            match self.swap(m, v, rng)? {
                Swap::Augmented => {
                    self.stats.tree_paths += 1;
                    return Ok(true);
                }
                Swap::Stuck => return Ok(false),
                Swap::Partner(x) if m.degree(v) < m.k() => (v, x),
                Swap::Partner(_) => return Ok(false),
            }
        };

        let ball = self.ball(m, u, rng);
        let first = match self.search(m, v, &ball, &HashSet::new(), rng)? {
            None => {
                self.stats.tree_failures += 1;
                return Ok(false);
            }
            Some(TreeOutcome::Augmenting { path, .. }) => {
                self.augment(m, &path, before)?;
                self.stats.tree_paths += 1;
                return Ok(true);
            }
            Some(TreeOutcome::Grown { tree, flip }) => (tree, flip),
        };
        let (tv, pv) = first;
        let avoid = tv.first_levels(self.params.avoid_depth);
        let avoid_path = tv.first_levels(self.params.path_avoid_depth);
        let (tu, pu) = match self.search(m, u, &avoid, &avoid_path, rng)? {
            None => {
                self.undo(m, &pv)?;
                self.stats.tree_failures += 1;
                return Ok(false);
            }
            Some(TreeOutcome::Augmenting { path, .. }) => {
                self.augment(m, &path, before)?;
                self.stats.tree_paths += 1;
                return Ok(true);
            }
            Some(TreeOutcome::Grown { tree, flip }) => (tree, flip),
        };

        let rect = self.rectangle(m, &tv, &tu, &pu);
        for &id in &rect.reserve_hits {
            let (a, b) = self.pool.remove(id);
            self.adj.add_pair(a, b);
        }
        self.stats.reserve_discarded += rect.reserve_hits.len();
        if rect.reserve_hits.len() > self.params.pool_cap {
            self.stats.oversized_rectangles += 1;
        }
        let Some((path, from_pool)) = rect.path else {
            self.undo(m, &pu)?;
            self.undo(m, &pv)?;
            self.stats.rectangle_misses += 1;
            return Ok(false);
        };
        self.augment(m, &path, before)?;
        self.stats.rectangle_paths += 1;
        self.stats.reserve_pairs_used += usize::from(from_pool.is_some());
        for x in tv.even_vertices().chain(tu.even_vertices()) {
            if !self.used[x] {
                self.used[x] = true;
                self.used_count += 1;
            }
        }
        let outside = self.used.len() - self.initial_count;
        if (self.used_count - self.initial_count) as f64 > self.params.reset_fraction * outside as f64 {
            self.used.copy_from_slice(self.initial_used);
            self.used_count = self.initial_count;
            self.stats.used_resets += 1;
        }
        Ok(true)
    }

    /// Scans the even levels of `tv` that avoid the second flip path and the
    /// top of `tu`, and for each such `v1` the pairs to even levels of `tu`
    /// that avoid the tree path to `v1`.
    fn rectangle(&self, m: &KMatching, tv: &AlternatingTree, tu: &AlternatingTree, pu: &[usize]) -> Rectangle {
        let mut blocked: HashSet<usize> = pu.iter().copied().collect();
        blocked.extend(tu.first_levels(self.params.path_avoid_depth));
        let flags = tv.descendant_flags(&blocked);
        let mut rect = Rectangle { reserve_hits: Vec::new(), path: None };
        let admissible_u = |u1: usize| !self.used[u1] && tu.depth_of(u1).is_some_and(|d| d % 2 == 0);
        for (i, node) in tv.nodes().iter().enumerate() {
            let v1 = node.vertex as usize;
            if node.depth % 2 == 1 || flags[i] || self.used[v1] {
                continue;
            }
            let to_v1 = tv.path_to(v1).expect("node is in the tree");
            let on_path: HashSet<usize> = to_v1.iter().copied().collect();
            let fits = |u1: usize| admissible_u(u1) && !tu.descends_from(u1, &on_path);
            for &id in &self.pool.at[v1] {
                if !self.pool.alive[id as usize] {
                    continue;
                }
                let u1 = self.pool.other(id, v1);
                if fits(u1) {
                    rect.reserve_hits.push(id);
                    if rect.path.is_none() {
                        rect.path = closing_path(m, &to_v1, tu, u1).map(|p| (p, Some(id)));
                    }
                }
            }
            if rect.path.is_none() {
                for &u1 in self.adj.neighbors(v1) {
                    let u1 = u1 as usize;
                    if fits(u1) && !m.contains(v1, u1) {
                        if let Some(p) = closing_path(m, &to_v1, tu, u1) {
                            rect.path = Some((p, None));
                            break;
                        }
                    }
                }
            }
        }
        rect.reserve_hits.sort_unstable();
        rect.reserve_hits.dedup();
        rect
    }
}

enum Swap {
    Augmented,
    Stuck,
    Partner(usize),
}

/// `to_v1` followed by the tree path from `u1` back to the root of `tu`, if
/// that trail augments `m`.
fn closing_path(m: &KMatching, to_v1: &[usize], tu: &AlternatingTree, u1: usize) -> Option<Vec<usize>> {
    let mut walk = to_v1.to_vec();
    let mut back = tu.path_to(u1)?;
    back.reverse();
    walk.extend(back);
    m.check_augmenting(&walk).is_ok().then_some(walk)
}

/// Augments `matching` on `reserved.residual` plus the reserved pairs until
/// every vertex but `excluded` is saturated or the exhaustive search finds
/// nothing more.
///
/// Each iteration picks two deficient vertices (swapping a pair in when only
/// one is left), searches a tree from each, and when neither tree contains
/// an augmenting path looks for a pair between their even levels. After
/// `params.iteration_retries` failed iterations in a row, one exhaustive
/// step runs over all pairs, reserve included.
pub fn augment_pool<R: Rng + ?Sized>(
    reserved: &ReservedEdges,
    matching: KMatching,
    excluded: Option<usize>,
    params: &AugmentParams,
    rng: &mut R,
) -> Result<PoolReport, AugmentError> {
    params.validate()?;
    let n = reserved.residual.n();
    let mut adj = Adjacency::from_graph(&reserved.residual);
    if let Some(z) = excluded {
        adj.isolate(z);
    }
    let mut initial_used = vec![false; n];
    for &v in &reserved.v0 {
        initial_used[v] = true;
    }
    let initial_count = reserved.v0.len();
    let mut aug = Augmenter {
        adj,
        pool: Pool::new(n, &reserved.e_p, excluded),
        supply: EdgeSupply::new(n, matching.k()),
        used: initial_used.clone(),
        used_count: initial_count,
        initial_used: &initial_used,
        initial_count,
        excluded,
        params,
        stats: AugmentStats::default(),
    };
    let mut m = matching;
    let mut streak = 0;
    let perfect = loop {
        let deficient = aug.deficient(&m);
        if deficient.is_empty() {
            break true;
        }
        aug.stats.iterations += 1;
        if aug.iterate(&mut m, &deficient, rng)? {
            streak = 0;
            continue;
        }
        streak += 1;
        if streak < params.iteration_retries {
            continue;
        }
        streak = 0;
        aug.stats.fallback_steps += 1;
        let mut full = aug.adj.clone();
        for (id, &(a, b)) in aug.pool.pairs.iter().enumerate() {
            if aug.pool.alive[id] {
                full.add_pair(a as usize, b as usize);
            }
        }
        match find_augmenting_trail(&full, &m, excluded, params.trail_budget) {
            TrailSearch::Found(path) => {
                let before = m.size();
                aug.augment(&mut m, &path, before)?;
                aug.stats.fallback_paths += 1;
                for p in path.windows(2) {
                    let (a, b) = (p[0], p[1]);
                    if let Some(&id) = aug.pool.at[a].iter().find(|&&id| aug.pool.alive[id as usize] && aug.pool.other(id, a) == b) {
                        aug.pool.remove(id);
                        aug.adj.add_pair(a, b);
                    }
                }
            }
            TrailSearch::None => break false,
            TrailSearch::BudgetExhausted => {
                aug.stats.trail_budget_exhausted = true;
                break false;
            }
        }
    };
    Ok(PoolReport { matching: m, stats: aug.stats, perfect, reserve_left: aug.pool.live })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MultiGraph;
    use crate::rng::stream;

    fn no_reserve(g: &MultiGraph) -> ReservedEdges {
        ReservedEdges { v0: Vec::new(), e_p: Vec::new(), residual: g.clone(), sampled: 0 }
    }

    #[test]
    fn perfect_input_is_returned_unchanged() {
        let k4 = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let g = MultiGraph::from_edge_list(4, &k4).unwrap();
        let m = KMatching::from_pairs(4, 2, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let params = AugmentParams::for_size(4, 2);
        let r = augment_pool(&no_reserve(&g), m.clone(), None, &params, &mut stream(1, "a")).unwrap();
        assert!(r.perfect);
        assert_eq!(r.matching, m);
        assert_eq!(r.stats.iterations, 0);
    }

    #[test]
    fn k4_completes_from_three_pairs() {
        let k4 = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let g = MultiGraph::from_edge_list(4, &k4).unwrap();
        let params = AugmentParams::for_size(4, 2);
        for seed in 0..20 {
            // A path 0-1-2-3 leaves 0 and 3 with one slot each.
            let m = KMatching::from_pairs(4, 2, &[(0, 1), (1, 2), (2, 3)]).unwrap();
            let r = augment_pool(&no_reserve(&g), m, None, &params, &mut stream(seed, "a")).unwrap();
            assert!(r.perfect);
            assert_eq!(r.matching.size(), 4);
        }
    }

    #[test]
    fn reports_best_effort_when_no_factor_exists() {
        // A star has no 2-factor; the result is still a maximum 2-matching.
        let g = MultiGraph::from_edge_list(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let params = AugmentParams { iteration_retries: 2, ..AugmentParams::for_size(4, 2) };
        let r = augment_pool(&no_reserve(&g), KMatching::new(4, 2), None, &params, &mut stream(2, "a")).unwrap();
        assert!(!r.perfect);
        assert_eq!(r.matching.size(), 2);
    }
}
