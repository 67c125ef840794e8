//! Mutable multigraph with half-edge incidence lists.
//!
//! Edge `e` owns half-edges `2e` and `2e + 1`. Each vertex keeps the handles
//! of its half-edges in a swap-delete array, so a uniform incident half-edge
//! is one index draw and deleting an edge is two O(1) removals. A loop puts
//! both of its half-edges at the same vertex and therefore counts 2 toward
//! the degree and toward sampling weight. Deleted edge ids are tombstoned and
//! never reissued.

use rand::Rng;
use thiserror::Error;

/// Stable handle to an edge of a [`MultiGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[must_use]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("edge {0:?} does not exist or was deleted")]
    StaleEdge(EdgeId),
    #[error("vertex {0} has no incident edges")]
    ZeroDegree(usize),
    #[error("graph too large: {0} edges exceeds the u32 handle space")]
    TooManyEdges(usize),
}

const NO_SLOT: u32 = u32::MAX;

#[derive(Clone, Debug, Default)]
pub struct MultiGraph {
    ends: Vec<[u32; 2]>,
    /// Position of each half-edge inside its owner's incidence list.
    slot: Vec<[u32; 2]>,
    incidence: Vec<Vec<u32>>,
    m: usize,
}

impl MultiGraph {
    /// Graph on `n` isolated vertices.
    #[must_use]
    pub fn new(n: usize) -> Self {
        Self {
            ends: Vec::new(),
            slot: Vec::new(),
            incidence: vec![Vec::new(); n],
            m: 0,
        }
    }

    /// Builds a graph from an edge list. Loops and repeated pairs are kept.
    pub fn from_edge_list(n: usize, pairs: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Self::new(n);
        g.ends.reserve(pairs.len());
        g.slot.reserve(pairs.len());
        for &(u, v) in pairs {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    #[must_use]
    pub fn n(&self) -> usize {
        self.incidence.len()
    }

    /// Number of live edges.
    #[must_use]
    pub fn m(&self) -> usize {
        self.m
    }

    #[must_use]
    pub fn degree(&self, v: usize) -> usize {
        self.incidence[v].len()
    }

    #[must_use]
    pub fn max_degree(&self) -> usize {
        self.incidence.iter().map(Vec::len).max().unwrap_or(0)
    }

    #[must_use]
    pub fn degrees(&self) -> Vec<usize> {
        self.incidence.iter().map(Vec::len).collect()
    }

    fn check_vertex(&self, v: usize) -> Result<(), GraphError> {
        if v < self.n() {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange { vertex: v, n: self.n() })
        }
    }

    /// Inserts an edge and returns its fresh handle.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<EdgeId, GraphError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        let id = u32::try_from(self.ends.len())
            .ok()
            .filter(|&id| id < NO_SLOT / 2)
            .ok_or(GraphError::TooManyEdges(self.ends.len()))?;
        let (u32_, v32) = (u as u32, v as u32);
        self.ends.push([u32_, v32]);
        let su = self.incidence[u].len() as u32;
        self.incidence[u].push(2 * id);
        let sv = self.incidence[v].len() as u32;
        self.incidence[v].push(2 * id + 1);
        self.slot.push([su, sv]);
        self.m += 1;
        Ok(EdgeId(id))
    }

    #[must_use]
    pub fn is_alive(&self, e: EdgeId) -> bool {
        self.slot.get(e.index()).is_some_and(|s| s[0] != NO_SLOT)
    }

    /// Endpoints of `e` (live or deleted).
    #[must_use]
    pub fn endpoints(&self, e: EdgeId) -> (usize, usize) {
        let [u, v] = self.ends[e.index()];
        (u as usize, v as usize)
    }

    /// The endpoint of `e` opposite to `v` (`v` itself for a loop).
    #[must_use]
    pub fn other_end(&self, e: EdgeId, v: usize) -> usize {
        let (a, b) = self.endpoints(e);
        if a == v {
            b
        } else {
            a
        }
    }

    /// Uniform draw over the half-edges at `v`.
    pub fn random_incident_edge<R: Rng + ?Sized>(
        &self,
        v: usize,
        rng: &mut R,
    ) -> Result<EdgeId, GraphError> {
        self.check_vertex(v)?;
        let inc = &self.incidence[v];
        if inc.is_empty() {
            return Err(GraphError::ZeroDegree(v));
        }
        Ok(EdgeId(inc[rng.gen_range(0..inc.len())] >> 1))
    }

    fn remove_half_edge(&mut self, h: u32) {
        let e = (h >> 1) as usize;
        let side = (h & 1) as usize;
        let owner = self.ends[e][side] as usize;
        let pos = self.slot[e][side] as usize;
        let list = &mut self.incidence[owner];
        list.swap_remove(pos);
        if let Some(&moved) = list.get(pos) {
            self.slot[(moved >> 1) as usize][(moved & 1) as usize] = pos as u32;
        }
    }

    /// Removes `e`; its handle becomes stale.
    pub fn delete_edge(&mut self, e: EdgeId) -> Result<(), GraphError> {
        if !self.is_alive(e) {
            return Err(GraphError::StaleEdge(e));
        }
        self.remove_half_edge(2 * e.0);
        self.remove_half_edge(2 * e.0 + 1);
        self.slot[e.index()] = [NO_SLOT, NO_SLOT];
        self.m -= 1;
        Ok(())
    }

    /// Removes every edge at `v` and returns exactly the removed handles.
    pub fn delete_all_incident(&mut self, v: usize) -> Result<Vec<EdgeId>, GraphError> {
        self.check_vertex(v)?;
        let mut removed = Vec::with_capacity(self.incidence[v].len());
        while let Some(&h) = self.incidence[v].last() {
            let e = EdgeId(h >> 1);
            self.delete_edge(e)?;
            removed.push(e);
        }
        Ok(removed)
    }

    /// Handles of the half-edges at `v`; a loop appears twice.
    pub fn incident_edges(&self, v: usize) -> impl Iterator<Item = EdgeId> + '_ {
        self.incidence[v].iter().map(|&h| EdgeId(h >> 1))
    }

    /// Neighbors of `v` with multiplicity; a loop yields `v` twice.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.incidence[v].iter().map(move |&h| {
            let [a, b] = self.ends[(h >> 1) as usize];
            if h & 1 == 0 {
                b as usize
            } else {
                a as usize
            }
        })
    }

    /// Live edges as `(handle, u, v)`.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, usize, usize)> + '_ {
        self.ends.iter().enumerate().filter_map(move |(i, &[u, v])| {
            (self.slot[i][0] != NO_SLOT).then_some((EdgeId(i as u32), u as usize, v as usize))
        })
    }

    /// Live edges as endpoint pairs.
    #[must_use]
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.edges().map(|(_, u, v)| (u, v)).collect()
    }

    /// Distinct non-loop neighbors of each vertex, sorted.
    #[must_use]
    pub fn simple_adjacency(&self) -> Vec<Vec<u32>> {
        (0..self.n())
            .map(|v| {
                let mut nb: Vec<u32> = self
                    .neighbors(v)
                    .filter(|&u| u != v)
                    .map(|u| u as u32)
                    .collect();
                nb.sort_unstable();
                nb.dedup();
                nb
            })
            .collect()
    }

    /// Subgraph induced by `keep`, with vertices renumbered in increasing
    /// order of their original ids. Returns the graph and the new-to-old map.
    #[must_use]
    pub fn induced(&self, keep: &[bool]) -> (Self, Vec<usize>) {
        let old_of: Vec<usize> = (0..self.n()).filter(|&v| keep[v]).collect();
        let mut new_of = vec![usize::MAX; self.n()];
        for (i, &v) in old_of.iter().enumerate() {
            new_of[v] = i;
        }
        let mut g = Self::new(old_of.len());
        for (_, u, v) in self.edges() {
            if keep[u] && keep[v] {
                g.add_edge(new_of[u], new_of[v])
                    .expect("renumbered endpoints are in range");
            }
        }
        (g, old_of)
    }

    /// Recomputes degrees from the live edge list and checks every stored
    /// slot; returns a description of the first inconsistency.
    pub fn validate(&self) -> Result<(), String> {
        let mut deg = vec![0usize; self.n()];
        for (_, u, v) in self.edges() {
            deg[u] += 1;
            deg[v] += 1;
        }
        for (v, &d) in deg.iter().enumerate() {
            if d != self.degree(v) {
                return Err(format!("vertex {v}: stored degree {} != recount {d}", self.degree(v)));
            }
            for (pos, &h) in self.incidence[v].iter().enumerate() {
                let (e, side) = ((h >> 1) as usize, (h & 1) as usize);
                if self.ends[e][side] as usize != v || self.slot[e][side] as usize != pos {
                    return Err(format!("half-edge {h} misplaced at vertex {v}"));
                }
            }
        }
        let live = self.edges().count();
        if live != self.m {
            return Err(format!("edge count {} != live edges {live}", self.m));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn k4() -> MultiGraph {
        let pairs: Vec<_> = (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v))).collect();
        MultiGraph::from_edge_list(4, &pairs).unwrap()
    }

    #[test]
    fn empty_graph() {
        let g = MultiGraph::from_edge_list(3, &[]).unwrap();
        assert_eq!(g.m(), 0);
        assert_eq!(g.degrees(), vec![0, 0, 0]);
    }

    #[test]
    fn loop_counts_twice() {
        let g = MultiGraph::from_edge_list(1, &[(0, 0)]).unwrap();
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.m(), 1);
    }

    #[test]
    fn complete_graph_degrees() {
        assert_eq!(k4().degrees(), vec![3; 4]);
    }

    #[test]
    fn out_of_range_rejected() {
        assert_eq!(
            MultiGraph::from_edge_list(2, &[(0, 2)]).unwrap_err(),
            GraphError::VertexOutOfRange { vertex: 2, n: 2 }
        );
    }

    #[test]
    fn single_edge_always_sampled() {
        let g = MultiGraph::from_edge_list(2, &[(0, 1)]).unwrap();
        let mut rng = stream(1, "t");
        for _ in 0..100 {
            assert_eq!(g.random_incident_edge(0, &mut rng).unwrap(), EdgeId(0));
        }
    }

    #[test]
    fn zero_degree_sampling_fails() {
        let g = MultiGraph::new(2);
        let mut rng = stream(1, "t");
        assert_eq!(g.random_incident_edge(1, &mut rng), Err(GraphError::ZeroDegree(1)));
    }

    fn frequency(g: &MultiGraph, v: usize, hit: impl Fn(EdgeId) -> bool) -> f64 {
        let mut rng = stream(3, "freq");
        let draws = 100_000;
        let hits = (0..draws)
            .filter(|_| hit(g.random_incident_edge(v, &mut rng).unwrap()))
            .count();
        hits as f64 / draws as f64
    }

    #[test]
    fn multi_edge_weighted_by_multiplicity() {
        let g = MultiGraph::from_edge_list(3, &[(0, 1), (0, 1), (0, 2)]).unwrap();
        let p = frequency(&g, 0, |e| g.other_end(e, 0) == 1);
        let sigma = (2.0 / 9.0 / 100_000.0f64).sqrt();
        assert!((p - 2.0 / 3.0).abs() < 3.0 * sigma, "p = {p}");
    }

    #[test]
    fn loop_weighted_twice() {
        let g = MultiGraph::from_edge_list(2, &[(0, 0), (0, 1)]).unwrap();
        let p = frequency(&g, 0, |e| g.endpoints(e) == (0, 0));
        let sigma = (2.0 / 9.0 / 100_000.0f64).sqrt();
        assert!((p - 2.0 / 3.0).abs() < 3.0 * sigma, "p = {p}");
    }

    #[test]
    fn delete_only_edge() {
        let mut g = MultiGraph::from_edge_list(2, &[(0, 1)]).unwrap();
        g.delete_edge(EdgeId(0)).unwrap();
        assert_eq!(g.m(), 0);
        assert_eq!(g.degrees(), vec![0, 0]);
        assert_eq!(g.delete_edge(EdgeId(0)), Err(GraphError::StaleEdge(EdgeId(0))));
    }

    #[test]
    fn star_center_cascade() {
        let mut g = MultiGraph::from_edge_list(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let mut removed = g.delete_all_incident(0).unwrap();
        removed.sort();
        assert_eq!(removed, vec![EdgeId(0), EdgeId(1), EdgeId(2)]);
        assert_eq!(g.degrees(), vec![0; 4]);
        g.validate().unwrap();
    }

    #[test]
    fn delete_one_copy_of_double_edge() {
        let mut g = MultiGraph::from_edge_list(2, &[(0, 1), (0, 1)]).unwrap();
        g.delete_edge(EdgeId(1)).unwrap();
        assert!(g.is_alive(EdgeId(0)));
        assert_eq!(g.degrees(), vec![1, 1]);
        g.validate().unwrap();
    }

    #[test]
    fn loop_cascade_removes_both_half_edges() {
        let mut g = MultiGraph::from_edge_list(2, &[(0, 0), (0, 1), (1, 1)]).unwrap();
        let removed = g.delete_all_incident(0).unwrap();
        assert_eq!(removed.len(), 2);
        assert_eq!(g.degrees(), vec![0, 2]);
        g.validate().unwrap();
    }

    #[test]
    fn induced_subgraph_renumbers() {
        let g = k4();
        let (h, map) = g.induced(&[true, false, true, true]);
        assert_eq!(map, vec![0, 2, 3]);
        assert_eq!(h.m(), 3);
        assert_eq!(h.degrees(), vec![2, 2, 2]);
    }

    #[test]
    fn simple_adjacency_drops_loops_and_copies() {
        let g = MultiGraph::from_edge_list(3, &[(0, 1), (0, 1), (0, 0), (2, 0)]).unwrap();
        assert_eq!(g.simple_adjacency()[0], vec![1, 2]);
    }
}
