//! From a near-perfect k-matching to a k-factor.
//!
//! The pipeline reserves a random set of edges, runs the greedy on what is
//! left (serving the vertices that lost edges on a fixed period), and then
//! repairs the remaining deficit with randomized alternating trees. When two
//! trees grow large without meeting a deficient vertex, an unused reserved
//! edge between their even levels closes an augmenting path. An exhaustive
//! alternating search backs up the randomized step so the pipeline always
//! ends in a maximal object.

mod exhaustive;
mod pipeline;
mod pool;
mod search;
mod start;
mod tree;

pub use exhaustive::{exhaustive_augment, find_augmenting_trail, ExhaustiveReport, TrailSearch, DEFAULT_TRAIL_BUDGET};
pub use pipeline::{find_k_factor, FactorConfig, FactorOutcome, FactorStatus};
pub use pool::{augment_pool, AugmentStats, PoolReport};
pub use search::{generate_tree, TreeOutcome, TreeRequest};
pub use start::{factor_critical_start, pick_excluded_vertex, StartReport};
pub use tree::{AlternatingTree, EdgeSupply, TreeNode};

use crate::graph::MultiGraph;
use crate::matching::MatchingError;
use crate::tinf::{self, Priority, TinfConfig, TinfError, TinfOutcome};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AugmentError {
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("tree root {0} is already saturated")]
    RootSaturated(usize),
    #[error("local structure around {z} rules out the preprocessing: {detail}")]
    LocalStructure { z: usize, detail: String },
    #[error("matching update failed: {0}")]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Tinf(#[from] TinfError),
    #[error("invariant violated after {stage}: {detail}")]
    Invariant { stage: &'static str, detail: String },
}

/// Distinct non-loop neighbor lists; the graph the trees and the exhaustive
/// search walk on. Pairs revealed from the reserve are appended.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Adjacency {
    lists: Vec<Vec<u32>>,
}

impl Adjacency {
    #[must_use]
    pub fn from_graph(g: &MultiGraph) -> Self {
        Self { lists: g.simple_adjacency() }
    }

    #[must_use]
    pub fn n(&self) -> usize {
        self.lists.len()
    }

    #[must_use]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.lists[v]
    }

    #[must_use]
    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.lists[u].contains(&(v as u32))
    }

    /// Adds the pair unless it is a loop or already present.
    pub fn add_pair(&mut self, u: usize, v: usize) -> bool {
        if u == v || self.contains(u, v) {
            return false;
        }
        self.lists[u].push(v as u32);
        self.lists[v].push(u as u32);
        true
    }

    /// Removes every pair at `v`.
    pub fn isolate(&mut self, v: usize) {
        for u in std::mem::take(&mut self.lists[v]) {
            self.lists[u as usize].retain(|&x| x as usize != v);
        }
    }
}

/// Tree heights, exclusion depths and budgets of the augmentation loop.
///
/// Heights count pairs of levels, so a tree of height `l` has levels
/// `0..=2l`. Depths of the exclusion sets count single levels.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct AugmentParams {
    pub l1: usize,
    pub l2: usize,
    /// Height added on top of `l1` before the leaf is chosen.
    pub ext: usize,
    /// Levels of a tree that must avoid the first exclusion set.
    pub avoid_depth: usize,
    /// Levels of the first tree that the second flip path must avoid.
    pub path_avoid_depth: usize,
    /// Radius of the supply ball around the second deficient vertex.
    pub ball_radius: usize,
    /// Attempts per tree search.
    pub attempts: usize,
    /// Even-level vertices outside the used set a grown tree must reach.
    pub size_threshold: usize,
    /// Reserved pairs a single rectangle may consume before it is counted as
    /// oversized.
    pub pool_cap: usize,
    /// Consecutive failed iterations before one exhaustive step.
    pub iteration_retries: usize,
    pub trail_budget: usize,
    /// The used set is reset to the initial set once it covers this fraction
    /// of the vertices outside it.
    pub reset_fraction: f64,
}

impl AugmentParams {
    /// Parameters for `n` vertices, with the logarithmic exponents floored so
    /// that every depth is at least one.
    #[must_use]
    pub fn for_size(n: usize, k: usize) -> Self {
        let nf = (n.max(2)) as f64;
        let base = (k.max(2)) as f64;
        let log_k = nf.ln() / base.ln();
        let floor_at = |x: f64, lo: usize| (x.floor() as usize).max(lo);
        let l1 = floor_at(0.41 * log_k, 1);
        let l2 = floor_at(0.589 * log_k, l1 + 1);
        let cap_by_height = base.powi(l2 as i32) / 4.0;
        Self {
            l1,
            l2,
            ext: floor_at(0.05 * log_k, 1),
            avoid_depth: floor_at(0.1 * log_k, 1),
            path_avoid_depth: floor_at(0.02 * log_k, 1),
            ball_radius: floor_at(0.1 * nf.ln() / (base + 1.0).ln(), 1),
            attempts: (nf.powf(0.001).ceil() as usize).max(64),
            size_threshold: (nf.powf(0.5889).min(cap_by_height).floor() as usize).max(1),
            pool_cap: nf.powf(0.25).ceil() as usize,
            iteration_retries: 16,
            trail_budget: DEFAULT_TRAIL_BUDGET,
            reset_fraction: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.l1 == 0 || self.l2 == 0 {
            return Err(AugmentError::Params("tree heights must be positive".into()));
        }
        if self.attempts == 0 || self.iteration_retries == 0 {
            return Err(AugmentError::Params("attempt budgets must be positive".into()));
        }
        if !(self.reset_fraction > 0.0 && self.reset_fraction <= 1.0) {
            return Err(AugmentError::Params("reset fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Output of the reservation step.
#[derive(Clone, Debug)]
pub struct ReservedEdges {
    /// Vertices left with at most `k` edges outside the sampled set, sorted.
    pub v0: Vec<usize>,
    /// Reserved pairs: sampled edges with no endpoint in `v0`.
    pub e_p: Vec<(usize, usize)>,
    /// The input graph without the reserved edges.
    pub residual: MultiGraph,
    /// Size of the sampled set before edges at `v0` were returned.
    pub sampled: usize,
}

/// Samples every edge with probability `p`, marks the vertices that keep at
/// most `k` unsampled edges, and reserves the sampled edges away from them.
pub fn reserve_edges<R: Rng + ?Sized>(g: &MultiGraph, k: usize, p: f64, rng: &mut R) -> Result<ReservedEdges, AugmentError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AugmentError::Probability(p));
    }
    let sampled: Vec<_> = g.edges().filter(|_| rng.gen_bool(p)).collect();
    let mut kept = g.degrees();
    for &(_, u, v) in &sampled {
        kept[u] -= 1;
        kept[v] -= 1;
    }
    let in_v0: Vec<bool> = kept.iter().map(|&d| d <= k).collect();
    let mut residual = g.clone();
    let mut e_p = Vec::new();
    for &(e, u, v) in &sampled {
        if !in_v0[u] && !in_v0[v] {
            residual.delete_edge(e).expect("sampled edges are live");
            e_p.push((u, v));
        }
    }
    Ok(ReservedEdges {
        v0: (0..g.n()).filter(|&v| in_v0[v]).collect(),
        e_p,
        residual,
        sampled: sampled.len(),
    })
}

/// Steps between two priority draws: `ceil(sqrt(n / n0) / k)`, at least 2.
#[must_use]
pub fn priority_period(n: usize, n0: usize, k: usize) -> usize {
    if n0 == 0 {
        return 0;
    }
    let raw = ((n as f64 / n0 as f64).sqrt() / k as f64).ceil() as usize;
    raw.max(2)
}

/// The greedy on `g` with the vertices of `v0` served every
/// [`priority_period`] steps.
pub fn run_tinf_with_priority<R: Rng + ?Sized>(
    g: MultiGraph,
    v0: &[usize],
    k: usize,
    rng: &mut R,
    cfg: &TinfConfig,
) -> Result<TinfOutcome, AugmentError> {
    let priority = Priority { members: v0.to_vec(), period: priority_period(g.n(), v0.len(), k) };
    Ok(tinf::run_with_priority(g, k, &priority, rng, cfg)?)
}

/// Total deficiency `sum_v (k - d_M(v))` over all vertices except `excluded`.
#[must_use]
pub fn deficit(m: &crate::KMatching, excluded: Option<usize>) -> usize {
    m.deficient_vertices().filter(|&v| Some(v) != excluded).map(|v| m.deficiency(v)).sum()
}
