//! Preprocessing for odd `kn`: empty out one vertex `z` and saturate its
//! neighborhood so that augmentation never needs `z` again.

use super::{Adjacency, AugmentError};
use crate::matching::KMatching;
use rand::Rng;
use std::collections::VecDeque;

const FAR: u32 = u32::MAX;

/// BFS distances from `z`, capped at `limit` (vertices beyond stay `FAR`).
fn distances(adj: &Adjacency, z: usize, limit: u32) -> (Vec<u32>, Vec<usize>) {
    let mut dist = vec![FAR; adj.n()];
    let mut order = vec![z];
    dist[z] = 0;
    let mut queue = VecDeque::from([z]);
    while let Some(x) = queue.pop_front() {
        if dist[x] == limit {
            continue;
        }
        for &y in adj.neighbors(x) {
            let y = y as usize;
            if dist[y] == FAR {
                dist[y] = dist[x] + 1;
                order.push(y);
                queue.push_back(y);
            }
        }
    }
    (dist, order)
}

/// Cycle rank of the ball (connected, so `edges - |ball| + 1`) and, when the
/// rank is one, the cycle itself.
fn ball_cycle(adj: &Adjacency, ball: &[usize], inside: &[bool]) -> (usize, Vec<usize>) {
    let mut deg: Vec<usize> = vec![0; adj.n()];
    let mut edges = 0;
    for &v in ball {
        deg[v] = adj.neighbors(v).iter().filter(|&&y| inside[y as usize]).count();
        edges += deg[v];
    }
    let rank = (edges / 2 + 1).saturating_sub(ball.len());
    if rank != 1 {
        return (rank, Vec::new());
    }
    let mut alive = inside.to_vec();
    let mut leaves: Vec<usize> = ball.iter().copied().filter(|&v| deg[v] <= 1).collect();
    while let Some(v) = leaves.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for &y in adj.neighbors(v) {
            let y = y as usize;
            if alive[y] {
                deg[y] -= 1;
                if deg[y] == 1 {
                    leaves.push(y);
                }
            }
        }
    }
    // What survives peeling is the cycle; walk it in order.
    let start = ball.iter().copied().find(|&v| alive[v]).expect("rank one leaves a cycle");
    let mut cycle = vec![start];
    let (mut prev, mut cur) = (usize::MAX, start);
    loop {
        let next = adj
            .neighbors(cur)
            .iter()
            .map(|&y| y as usize)
            .find(|&y| alive[y] && y != prev)
            .expect("cycle vertices have two cycle neighbors");
        if next == start {
            break;
        }
        cycle.push(next);
        (prev, cur) = (cur, next);
    }
    (rank, cycle)
}

/// What the preprocessing found and changed around `z`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct StartReport {
    /// Independent cycles spanned by the radius-4 ball.
    pub cycle_rank: usize,
    /// Length of the matched cycle; zero when none was matched.
    pub cycle_len: usize,
    /// Matched pairs dropped inside the ball.
    pub removed: usize,
    /// Pairs joining two vertices of the same distance class.
    pub same_layer: usize,
    /// `true` when the neighborhood already satisfied the target.
    pub unchanged: bool,
}

/// Rebuilds `m` around `z`: drops every matched pair at a vertex within
/// distance 4, matches the cycle there when the ball spans exactly one
/// (and it avoids `z`), then lets each vertex at distance 1, 2, 3 in turn take
/// partners one level further out until it is saturated. A vertex that runs
/// out of outward partners may take partners from its own distance class.
/// When `z` is already unmatched and everything within distance 3 is
/// saturated, `m` is returned unchanged.
pub fn factor_critical_start(adj: &Adjacency, m: &KMatching, z: usize) -> Result<(KMatching, StartReport), AugmentError> {
    let k = m.k();
    let (dist, order) = distances(adj, z, 5);
    if m.degree(z) == 0 && order.iter().all(|&v| dist[v] > 3 || v == z || m.degree(v) == k) {
        return Ok((m.clone(), StartReport { unchanged: true, ..StartReport::default() }));
    }
    let ball: Vec<usize> = order.iter().copied().filter(|&v| dist[v] <= 4).collect();
    let mut inside = vec![false; adj.n()];
    for &v in &ball {
        inside[v] = true;
    }
    let (cycle_rank, mut cycle) = ball_cycle(adj, &ball, &inside);
    if cycle.contains(&z) || cycle.len() < 3 {
        cycle.clear();
    }
    let mut on_cycle = vec![false; adj.n()];
    for &v in &cycle {
        on_cycle[v] = true;
    }
    let mut report = StartReport { cycle_rank, cycle_len: cycle.len(), ..StartReport::default() };

    let mut out = m.clone();
    for &v in &ball {
        for u in m.partners(v) {
            let u = *u as usize;
            if out.contains(v, u) {
                out.remove(v, u)?;
                report.removed += 1;
            }
        }
    }
    for (i, &v) in cycle.iter().enumerate() {
        out.insert(v, cycle[(i + 1) % cycle.len()])?;
    }
    for layer in 1..=3 {
        for &v in ball.iter().filter(|&&v| dist[v] == layer) {
            for (class, same) in [(layer + 1, false), (layer, true)] {
                for &y in adj.neighbors(v) {
                    if out.degree(v) == k {
                        break;
                    }
                    let y = y as usize;
                    if dist[y] == class && !on_cycle[y] && out.degree(y) < k && !out.contains(v, y) {
                        out.insert(v, y)?;
                        report.same_layer += usize::from(same);
                    }
                }
            }
            if out.degree(v) < k {
                return Err(AugmentError::LocalStructure {
                    z,
                    detail: format!("vertex {v} at distance {layer} cannot be saturated"),
                });
            }
        }
    }
    Ok((out, report))
}

/// Picks the vertex to leave out for odd `kn`: random candidates whose
/// radius-4 ball holds no deficient vertex are tried first, then any vertex
/// the preprocessing accepts. Returns `z`, the rebuilt matching, its report
/// and the number of candidates tried.
pub fn pick_excluded_vertex<R: Rng + ?Sized>(
    adj: &Adjacency,
    m: &KMatching,
    tries: usize,
    rng: &mut R,
) -> Result<(usize, KMatching, StartReport, usize), AugmentError> {
    let n = adj.n();
    if n == 0 {
        return Err(AugmentError::Params("empty graph has no vertex to exclude".into()));
    }
    let mut last = None;
    for attempt in 1..=tries {
        let z = rng.gen_range(0..n);
        let (dist, order) = distances(adj, z, 4);
        let clean = order.iter().all(|&v| dist[v] > 4 || m.degree(v) == m.k());
        if !clean {
            continue;
        }
        match factor_critical_start(adj, m, z) {
            Ok((out, rep)) => return Ok((z, out, rep, attempt)),
            Err(e) => last = Some(e),
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
    for (i, z) in order.into_iter().enumerate() {
        match factor_critical_start(adj, m, z) {
            Ok((out, rep)) => return Ok((z, out, rep, tries + i + 1)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one vertex was tried"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MultiGraph;
    use crate::rng::stream;

    fn check_predicate(adj: &Adjacency, m: &KMatching, z: usize) {
        let (dist, order) = distances(adj, z, 3);
        assert_eq!(m.degree(z), 0);
        for v in order {
            if v != z && dist[v] <= 3 {
                assert_eq!(m.degree(v), m.k(), "vertex {v} at distance {}", dist[v]);
            }
        }
    }

    #[test]
    fn already_clear_neighborhood_is_kept() {
        // A 2-factor on the 5-cycle; z = 5 hangs off 0 and 1.
        let pairs = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (5, 0), (5, 1)];
        let adj = Adjacency::from_graph(&MultiGraph::from_edge_list(6, &pairs).unwrap());
        let m = KMatching::from_pairs(6, 2, &pairs[..5]).unwrap();
        let (out, rep) = factor_critical_start(&adj, &m, 5).unwrap();
        assert_eq!(out, m);
        assert!(rep.unchanged);
    }

    #[test]
    fn tree_neighborhood_is_saturated_outward() {
        // Complete ternary tree of depth 5 rooted at z = 0.
        let mut pairs = Vec::new();
        let mut frontier = vec![0usize];
        let mut next_id = 1;
        for _ in 0..5 {
            let mut next = Vec::new();
            for &p in &frontier {
                for _ in 0..3 {
                    pairs.push((p, next_id));
                    next.push(next_id);
                    next_id += 1;
                }
            }
            frontier = next;
        }
        let adj = Adjacency::from_graph(&MultiGraph::from_edge_list(next_id, &pairs).unwrap());
        let mut m = KMatching::new(next_id, 2);
        m.insert(0, 1).unwrap();
        let (out, rep) = factor_critical_start(&adj, &m, 0).unwrap();
        check_predicate(&adj, &out, 0);
        assert_eq!((rep.cycle_rank, rep.cycle_len, rep.same_layer), (0, 0, 0));
    }

    #[test]
    fn dense_ball_uses_same_layer_partners() {
        let k4 = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let adj = Adjacency::from_graph(&MultiGraph::from_edge_list(4, &k4).unwrap());
        let m = KMatching::from_pairs(4, 2, &[(0, 1)]).unwrap();
        let (out, rep) = factor_critical_start(&adj, &m, 0).unwrap();
        check_predicate(&adj, &out, 0);
        assert_eq!(rep.cycle_rank, 3);
        assert_eq!(rep.same_layer, 3);
    }

    #[test]
    fn unsaturable_neighbor_is_reported() {
        let adj = Adjacency::from_graph(&MultiGraph::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap());
        let m = KMatching::from_pairs(3, 2, &[(0, 1)]).unwrap();
        assert!(matches!(factor_critical_start(&adj, &m, 0), Err(AugmentError::LocalStructure { z: 0, .. })));
    }

    #[test]
    fn random_core_instances_satisfy_the_predicate() {
        use crate::generate::sample_min_degree_graph;
        use crate::tinf::{run, TinfConfig};
        for seed in 0..10 {
            let g = sample_min_degree_graph(3001, 7502, 3, &mut stream(seed, "g")).unwrap();
            let adj = Adjacency::from_graph(&g);
            let out = run(g, 3, &mut stream(seed, "t"), &TinfConfig::default()).unwrap();
            let (z, m2, _, _) = pick_excluded_vertex(&adj, &out.matching, 64, &mut stream(seed, "z")).unwrap();
            check_predicate(&adj, &m2, z);
        }
    }
}
