//! Alternating trees grown from per-vertex random edge supplies.

use super::{Adjacency, AugmentError};
use crate::matching::KMatching;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{HashMap, HashSet};

const NO_PARENT: u32 = u32::MAX;

/// Fixed random edge choices of one augmentation iteration.
///
/// On first use in an iteration, vertex `w` draws `k + 1 - d(w)` distinct
/// non-matching neighbors, where `d` and "matching" refer to the matching at
/// the start of the iteration, and keeps them together with its matching
/// partners. Flips applied later in the iteration are recorded so the start
/// matching can still be recovered for vertices drawn after them.
#[derive(Clone, Debug)]
pub struct EdgeSupply {
    k: usize,
    stamp: Vec<u32>,
    epoch: u32,
    lists: Vec<Vec<u32>>,
    flipped: Vec<(u32, u32)>,
}

fn key(u: usize, v: usize) -> (u32, u32) {
    (u.min(v) as u32, u.max(v) as u32)
}

impl EdgeSupply {
    #[must_use]
    pub fn new(n: usize, k: usize) -> Self {
        Self { k, stamp: vec![0; n], epoch: 1, lists: vec![Vec::new(); n], flipped: Vec::new() }
    }

    /// Starts a new iteration: every supply is redrawn on next use.
    pub fn renew(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.flipped.clear();
    }

    /// Notes that the consecutive pairs of `walk` were toggled in the
    /// matching since the iteration started.
    pub fn record_flip(&mut self, walk: &[usize]) {
        for p in walk.windows(2) {
            let kp = key(p[0], p[1]);
            if let Some(i) = self.flipped.iter().position(|&x| x == kp) {
                self.flipped.swap_remove(i);
            } else {
                self.flipped.push(kp);
            }
        }
    }

    fn in_start(&self, m: &KMatching, u: usize, v: usize) -> bool {
        m.contains(u, v) != self.flipped.contains(&key(u, v))
    }

    /// The supply `E_w` of `w`, drawn if this iteration has not used it yet.
    pub fn get<R: Rng + ?Sized>(&mut self, adj: &Adjacency, m: &KMatching, w: usize, rng: &mut R) -> &[u32] {
        if self.stamp[w] != self.epoch {
            self.stamp[w] = self.epoch;
            let (mut partners, mut free): (Vec<u32>, Vec<u32>) =
                adj.neighbors(w).iter().partition(|&&x| self.in_start(m, w, x as usize));
            // Start-matching partners reached only through a revealed pair
            // are already in the adjacency; nothing else can be matched.
            let want = (self.k + 1).saturating_sub(partners.len()).min(free.len());
            let (chosen, _) = free.partial_shuffle(rng, want);
            partners.extend_from_slice(chosen);
            self.lists[w] = partners;
        }
        &self.lists[w]
    }

    /// Up to `count` distinct supply neighbors of `w` that are unmatched to
    /// `w` in the current matching, uniformly chosen.
    pub fn pick_free<R: Rng + ?Sized>(
        &mut self,
        adj: &Adjacency,
        m: &KMatching,
        w: usize,
        count: usize,
        rng: &mut R,
    ) -> Vec<usize> {
        let mut free: Vec<usize> = self
            .get(adj, m, w, rng)
            .iter()
            .map(|&x| x as usize)
            .filter(|&x| !m.contains(w, x))
            .collect();
        let take = count.min(free.len());
        let (chosen, _) = free.partial_shuffle(rng, take);
        chosen.to_vec()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub vertex: u32,
    /// Node index of the parent; `u32::MAX` at the root.
    pub parent: u32,
    pub depth: u32,
}

/// A tree of alternating paths from a root. Edges into odd levels are not
/// in the matching the tree was grown under; edges into even levels are.
#[derive(Clone, Debug)]
pub struct AlternatingTree {
    nodes: Vec<TreeNode>,
    levels: Vec<Vec<u32>>,
    index: HashMap<u32, u32>,
}

impl AlternatingTree {
    fn singleton(root: usize) -> Self {
        Self {
            nodes: vec![TreeNode { vertex: root as u32, parent: NO_PARENT, depth: 0 }],
            levels: vec![vec![0]],
            index: HashMap::from([(root as u32, 0)]),
        }
    }

    /// Grows `T(root, M, height)`: levels `0..=2 * height` unless the tree
    /// dies out earlier.
    pub fn grow<R: Rng + ?Sized>(
        root: usize,
        m: &KMatching,
        height: usize,
        adj: &Adjacency,
        supply: &mut EdgeSupply,
        rng: &mut R,
    ) -> Result<Self, AugmentError> {
        if m.degree(root) >= m.k() {
            return Err(AugmentError::RootSaturated(root));
        }
        let mut t = Self::singleton(root);
        t.extend(2 * height, m, adj, supply, rng);
        Ok(t)
    }

    /// Adds levels under the rules of `T(root, M, .)` until the tree has
    /// `levels` levels below the root or a level comes out empty. A tree
    /// that is still only its root draws two edges there.
    pub fn extend<R: Rng + ?Sized>(
        &mut self,
        levels: usize,
        m: &KMatching,
        adj: &Adjacency,
        supply: &mut EdgeSupply,
        rng: &mut R,
    ) {
        while self.height() < levels {
            let i = self.levels.len();
            let parents = self.levels[i - 1].clone();
            let mut next = Vec::new();
            for p in parents {
                let x = self.nodes[p as usize].vertex as usize;
                let children = if i % 2 == 1 {
                    supply.pick_free(adj, m, x, if i == 1 { 2 } else { 1 }, rng)
                } else {
                    m.partners(x).iter().map(|&y| y as usize).collect()
                };
                for y in children {
                    if !self.index.contains_key(&(y as u32)) {
                        let id = self.nodes.len() as u32;
                        self.nodes.push(TreeNode { vertex: y as u32, parent: p, depth: i as u32 });
                        self.index.insert(y as u32, id);
                        next.push(id);
                    }
                }
            }
            if next.is_empty() {
                return;
            }
            self.levels.push(next);
        }
    }

    #[must_use]
    pub fn root(&self) -> usize {
        self.nodes[0].vertex as usize
    }

    /// Index of the deepest level.
    #[must_use]
    pub fn height(&self) -> usize {
        self.levels.len() - 1
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[must_use]
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    #[must_use]
    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    pub fn level(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.levels.get(i).into_iter().flatten().map(|&id| self.nodes[id as usize].vertex as usize)
    }

    #[must_use]
    pub fn contains(&self, v: usize) -> bool {
        self.index.contains_key(&(v as u32))
    }

    #[must_use]
    pub fn node_of(&self, v: usize) -> Option<usize> {
        self.index.get(&(v as u32)).map(|&i| i as usize)
    }

    #[must_use]
    pub fn depth_of(&self, v: usize) -> Option<usize> {
        self.node_of(v).map(|i| self.nodes[i].depth as usize)
    }

    /// Vertices of the even levels, root included.
    pub fn even_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter(|n| n.depth % 2 == 0).map(|n| n.vertex as usize)
    }

    /// Vertices on levels `0..depth`.
    #[must_use]
    pub fn first_levels(&self, depth: usize) -> HashSet<usize> {
        (0..depth.min(self.levels.len())).flat_map(|i| self.level(i)).collect()
    }

    /// Vertices from the root to `v`, in order.
    #[must_use]
    pub fn path_to(&self, v: usize) -> Option<Vec<usize>> {
        let mut id = self.node_of(v)? as u32;
        let mut path = Vec::with_capacity(self.nodes[id as usize].depth as usize + 1);
        while id != NO_PARENT {
            let n = self.nodes[id as usize];
            path.push(n.vertex as usize);
            id = n.parent;
        }
        path.reverse();
        Some(path)
    }

    /// Whether `v` or one of its ancestors lies in `set`.
    #[must_use]
    pub fn descends_from(&self, v: usize, set: &HashSet<usize>) -> bool {
        let Some(mut id) = self.node_of(v).map(|i| i as u32) else { return false };
        while id != NO_PARENT {
            let n = self.nodes[id as usize];
            if set.contains(&(n.vertex as usize)) {
                return true;
            }
            id = n.parent;
        }
        false
    }

    /// Per node: whether the node or an ancestor lies in `set`.
    #[must_use]
    pub fn descendant_flags(&self, set: &HashSet<usize>) -> Vec<bool> {
        let mut flags = vec![false; self.nodes.len()];
        // Nodes are stored level by level, so parents precede children.
        for (i, n) in self.nodes.iter().enumerate() {
            let inherited = n.parent != NO_PARENT && flags[n.parent as usize];
            flags[i] = inherited || set.contains(&(n.vertex as usize));
        }
        flags
    }

    /// The subtree below `v`, rerooted at `v` with depths shifted.
    #[must_use]
    pub fn subtree(&self, v: usize) -> Option<Self> {
        let top = self.node_of(v)?;
        let shift = self.nodes[top].depth;
        let mut new_id = vec![NO_PARENT; self.nodes.len()];
        let mut t = Self::singleton(v);
        new_id[top] = 0;
        for (i, n) in self.nodes.iter().enumerate().skip(top + 1) {
            if n.parent == NO_PARENT || new_id[n.parent as usize] == NO_PARENT {
                continue;
            }
            let depth = n.depth - shift;
            let id = t.nodes.len() as u32;
            t.nodes.push(TreeNode { vertex: n.vertex, parent: new_id[n.parent as usize], depth });
            t.index.insert(n.vertex, id);
            if t.levels.len() <= depth as usize {
                t.levels.push(Vec::new());
            }
            t.levels[depth as usize].push(id);
            new_id[i] = id;
        }
        Some(t)
    }

    /// The first odd-level vertex that is deficient under `m`.
    #[must_use]
    pub fn deficient_odd(&self, m: &KMatching) -> Option<usize> {
        self.nodes
            .iter()
            .filter(|n| n.depth % 2 == 1)
            .map(|n| n.vertex as usize)
            .find(|&v| m.degree(v) < m.k())
    }

    /// Checks the edge classes against `m` and the tree structure: distinct
    /// vertices, parents one level up, edges present in `adj`.
    pub fn check(&self, m: &KMatching, adj: &Adjacency) -> Result<(), String> {
        if self.index.len() != self.nodes.len() {
            return Err("repeated vertex".into());
        }
        for (i, n) in self.nodes.iter().enumerate().skip(1) {
            let p = self.nodes.get(n.parent as usize).ok_or(format!("node {i} has no parent"))?;
            if p.depth + 1 != n.depth {
                return Err(format!("node {i} is not one level below its parent"));
            }
            let (u, v) = (p.vertex as usize, n.vertex as usize);
            if !adj.contains(u, v) {
                return Err(format!("tree edge {{{u}, {v}}} is not in the graph"));
            }
            if m.contains(u, v) != (n.depth % 2 == 0) {
                return Err(format!("edge {{{u}, {v}}} into level {} has the wrong class", n.depth));
            }
        }
        let counted: usize = self.levels.iter().map(Vec::len).sum();
        if counted != self.nodes.len() {
            return Err("level lists disagree with the node list".into());
        }
        Ok(())
    }
}
