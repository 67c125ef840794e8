//! Random multigraph samplers.
//!
//! The constrained sequence model draws degrees from truncated Poisson laws at
//! the rate solving the degree equation, conditions their sum on `2m`, and
//! pairs the half-edges uniformly. Also here: uniform simple graphs with a
//! given edge count, the random graph process stopped when a `(k+1)`-core
//! first appears, and linear-time core peeling.

use crate::graph::{GraphError, MultiGraph};
use crate::numerics::{normalized_tail, solve_lambda, NumericsError};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use std::collections::{HashSet, VecDeque};
use thiserror::Error;

pub use crate::numerics::DegreeConstraint;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("2m = {twice_m} is below (k+1)n = {floor}")]
    Infeasible { twice_m: u64, floor: u64 },
    #[error("degree sum still off target after {0} repair moves")]
    RepairExhausted(usize),
    #[error("requested {m} edges but only {max} vertex pairs exist")]
    TooDense { m: usize, max: usize },
    #[error("the process added all {0} pairs without creating a core")]
    Exhausted(usize),
    #[error("no simple sample within {0} attempts")]
    NotSimple(usize),
}

/// `Po(x)` conditioned on being at least `floor`, sampled by inversion of a
/// precomputed CDF table. A guide table maps each of `GUIDE` equal slices of
/// `[0, 1)` to the first CDF entry that can hold it, so a draw costs about
/// one comparison.
#[derive(Clone, Debug)]
pub struct TruncatedPoisson {
    floor: usize,
    cdf: Vec<f64>,
    guide: Vec<u32>,
}

impl TruncatedPoisson {
    /// Mass below this is dropped from the table's upper tail.
    const TAIL: f64 = 1e-17;
    const GUIDE: usize = 256;

    #[must_use]
    pub fn new(rate: f64, floor: usize) -> Self {
        let mut cdf = Vec::new();
        if rate > 0.0 {
            let mut pmf = 1.0 / normalized_tail(floor as u32, rate);
            let mut total = 0.0;
            let mut r = floor;
            loop {
                total += pmf;
                cdf.push(total);
                r += 1;
                pmf *= rate / r as f64;
                if r as f64 > rate && (pmf < Self::TAIL || total >= 1.0) {
                    break;
                }
            }
        }
        if let Some(last) = cdf.last_mut() {
            *last = f64::INFINITY;
        } else {
            cdf.push(f64::INFINITY);
        }
        let guide = (0..Self::GUIDE)
            .map(|b| {
                let lo = b as f64 / Self::GUIDE as f64;
                cdf.partition_point(|&c| c <= lo) as u32
            })
            .collect();
        Self { floor, cdf, guide }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut i = self.guide[(u * Self::GUIDE as f64) as usize] as usize;
        while self.cdf[i] <= u {
            i += 1;
        }
        self.floor + i
    }

    /// Probability of each table entry, the last one absorbing the tail.
    fn masses(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cdf
            .iter()
            .map(|&c| {
                let p = c.min(1.0) - prev;
                prev = c.min(1.0);
                p.max(0.0)
            })
            .collect()
    }

    /// How many of `count` independent draws land on each table entry.
    fn multinomial<R: Rng + ?Sized>(&self, masses: &[f64], count: u64, rng: &mut R, out: &mut [u64]) {
        let mut left = count;
        let mut mass_left = 1.0;
        for (i, &p) in masses.iter().enumerate() {
            if left == 0 || i + 1 == masses.len() {
                out[i] = left;
                left = 0;
                continue;
            }
            let share = if mass_left > 0.0 { (p / mass_left).clamp(0.0, 1.0) } else { 1.0 };
            out[i] = Binomial::new(left, share).expect("share in [0, 1]").sample(rng);
            left -= out[i];
            mass_left -= p;
        }
    }
}

/// One draw of `Po_{>=floor}(rate)`; a zero rate returns `floor`.
pub fn sample_truncated_poisson<R: Rng + ?Sized>(rate: f64, floor: usize, rng: &mut R) -> usize {
    TruncatedPoisson::new(rate, floor).sample(rng)
}

/// Degrees drawn under a constraint, conditioned to sum to `2m`.
#[derive(Clone, Debug)]
pub struct DegreeSample {
    pub degrees: Vec<usize>,
    pub rate: f64,
    /// Full redraws tried before the sum matched (or the budget ran out).
    pub attempts: usize,
    /// Single-vertex redraws used by the repair walk; zero when rejection
    /// alone hit the target.
    pub repair_moves: usize,
}

/// Samples the degree sequence of the constrained sequence model.
///
/// The free degrees of one label are i.i.d., so their sum depends only on how
/// many land on each value. Each rejection attempt therefore draws the count
/// vector of every label as a multinomial, and only an accepted vector is
/// expanded and shuffled onto the vertices; this has exactly the law of
/// redrawing every degree until the sum is `2m`. After `ceil(10 sqrt m)`
/// failed attempts the last vector is expanded anyway and a repair walk
/// redraws one random free vertex at a time, keeping a redraw only if it moves
/// the sum strictly closer to `2m`.
pub fn sample_degrees<R: Rng + ?Sized>(
    dc: &DegreeConstraint,
    m: u64,
    rng: &mut R,
) -> Result<DegreeSample, GenerateError> {
    let sol = solve_lambda(dc, m)?;
    let target = 2 * m as usize;
    let mut degrees = Vec::with_capacity(dc.n() as usize);
    // Free vertex ids grouped by label.
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); dc.k() + 1];
    for (i, j, count) in dc.classes() {
        for _ in 0..count {
            if j == i + 1 {
                groups[i].push(degrees.len());
            }
            degrees.push(j);
        }
    }
    let laws: Vec<TruncatedPoisson> = (0..=dc.k()).map(|i| TruncatedPoisson::new(sol.lambda, i + 1)).collect();
    let masses: Vec<Vec<f64>> = laws.iter().map(TruncatedPoisson::masses).collect();
    let fixed: usize = degrees.iter().sum::<usize>() - (0..=dc.k()).map(|i| (i + 1) * groups[i].len()).sum::<usize>();
    let mut counts: Vec<Vec<u64>> = masses.iter().map(|ms| vec![0; ms.len()]).collect();

    let budget = ((10.0 * (m as f64).sqrt()).ceil() as usize).max(1);
    let mut attempts = 0;
    let mut sum = 0;
    while attempts < budget {
        attempts += 1;
        sum = fixed;
        for i in 0..=dc.k() {
            laws[i].multinomial(&masses[i], groups[i].len() as u64, rng, &mut counts[i]);
            sum += counts[i].iter().enumerate().map(|(r, &c)| (i + 1 + r) * c as usize).sum::<usize>();
        }
        if sum == target {
            break;
        }
    }
    for i in 0..=dc.k() {
        let mut values: Vec<usize> = counts[i]
            .iter()
            .enumerate()
            .flat_map(|(r, &c)| std::iter::repeat(i + 1 + r).take(c as usize))
            .collect();
        values.shuffle(rng);
        for (&v, d) in groups[i].iter().zip(values) {
            degrees[v] = d;
        }
    }
    if sum == target {
        return Ok(DegreeSample { degrees, rate: sol.lambda, attempts, repair_moves: 0 });
    }

    let free: Vec<(usize, usize)> = groups.iter().enumerate().flat_map(|(i, vs)| vs.iter().map(move |&v| (v, i))).collect();
    let cap = 1000 * free.len().max(1) + 10 * target;
    let mut moves = 0;
    while sum != target {
        if moves == cap {
            return Err(GenerateError::RepairExhausted(moves));
        }
        moves += 1;
        let (v, i) = free[rng.gen_range(0..free.len())];
        let fresh = laws[i].sample(rng);
        let next = sum - degrees[v] + fresh;
        if next.abs_diff(target) < sum.abs_diff(target) {
            degrees[v] = fresh;
            sum = next;
        }
    }
    Ok(DegreeSample { degrees, rate: sol.lambda, attempts, repair_moves: moves })
}

/// Uniform pairing of the half-edges of a degree sequence with even sum.
pub fn pair_half_edges<R: Rng + ?Sized>(degrees: &[usize], rng: &mut R) -> Result<MultiGraph, GenerateError> {
    let mut half: Vec<u32> = degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat(v as u32).take(d))
        .collect();
    debug_assert!(half.len() % 2 == 0, "odd degree sum");
    half.shuffle(rng);
    let pairs: Vec<(usize, usize)> = half.chunks_exact(2).map(|p| (p[0] as usize, p[1] as usize)).collect();
    Ok(MultiGraph::from_edge_list(degrees.len(), &pairs)?)
}

/// A multigraph from the constrained sequence model. Vertex ids follow the
/// class order of [`DegreeConstraint::classes`].
pub fn sample_constrained_sequence<R: Rng + ?Sized>(
    dc: &DegreeConstraint,
    m: u64,
    rng: &mut R,
) -> Result<MultiGraph, GenerateError> {
    let sample = sample_degrees(dc, m, rng)?;
    pair_half_edges(&sample.degrees, rng)
}

/// A random multigraph with `n` vertices, `m` edges and minimum degree `k+1`.
pub fn sample_min_degree_graph<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    k: usize,
    rng: &mut R,
) -> Result<MultiGraph, GenerateError> {
    let (twice_m, floor) = (2 * m as u64, (k as u64 + 1) * n as u64);
    if twice_m < floor {
        return Err(GenerateError::Infeasible { twice_m, floor });
    }
    sample_constrained_sequence(&DegreeConstraint::all_free(k, n as u64), m as u64, rng)
}

#[must_use]
pub fn is_simple(g: &MultiGraph) -> bool {
    let mut seen = HashSet::with_capacity(g.m());
    g.edges().all(|(_, u, v)| u != v && seen.insert((u.min(v), u.max(v))))
}

/// Like [`sample_min_degree_graph`] but redraws until the sample has no loops
/// or repeated pairs.
pub fn sample_simple_min_degree_graph<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    k: usize,
    max_attempts: usize,
    rng: &mut R,
) -> Result<MultiGraph, GenerateError> {
    let (twice_m, floor) = (2 * m as u64, (k as u64 + 1) * n as u64);
    if twice_m < floor {
        return Err(GenerateError::Infeasible { twice_m, floor });
    }
    let dc = DegreeConstraint::all_free(k, n as u64);
    for _ in 0..max_attempts {
        let degrees = sample_degrees(&dc, m as u64, rng)?.degrees;
        if let Some(pairs) = pair_until_defect(&degrees, rng) {
            return Ok(MultiGraph::from_edge_list(n, &pairs)?);
        }
    }
    Err(GenerateError::NotSimple(max_attempts))
}

/// Pairs half-edges one at a time, each with a uniform unpaired partner, and
/// gives up at the first loop or repeated pair. Completed pairings have the
/// law of [`pair_half_edges`] conditioned on simplicity.
fn pair_until_defect<R: Rng + ?Sized>(degrees: &[usize], rng: &mut R) -> Option<Vec<(usize, usize)>> {
    let mut half: Vec<u32> = degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat(v as u32).take(d))
        .collect();
    let mut seen = HashSet::with_capacity(half.len() / 2);
    let mut pairs = Vec::with_capacity(half.len() / 2);
    for i in (0..half.len()).step_by(2) {
        let j = rng.gen_range(i + 1..half.len());
        half.swap(i + 1, j);
        let (u, v) = (half[i] as usize, half[i + 1] as usize);
        if u == v || !seen.insert((u.min(v), u.max(v))) {
            return None;
        }
        pairs.push((u, v));
    }
    Some(pairs)
}

fn max_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Draws distinct uniform vertex pairs, appending to `order`.
fn extend_distinct<R: Rng + ?Sized>(
    n: usize,
    upto: usize,
    order: &mut Vec<(usize, usize)>,
    seen: &mut HashSet<(usize, usize)>,
    rng: &mut R,
) {
    while order.len() < upto {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v && seen.insert((u.min(v), u.max(v))) {
            order.push((u, v));
        }
    }
}

/// Uniform simple graph with exactly `m` edges.
pub fn gnm<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<MultiGraph, GenerateError> {
    let max = max_pairs(n);
    if m > max {
        return Err(GenerateError::TooDense { m, max });
    }
    let mut order = Vec::with_capacity(m);
    let mut seen = HashSet::with_capacity(m);
    if 2 * m <= max {
        extend_distinct(n, m, &mut order, &mut seen, rng);
    } else {
        // Dense: draw the complement instead.
        let mut skip = Vec::new();
        extend_distinct(n, max - m, &mut skip, &mut seen, rng);
        for u in 0..n {
            for v in u + 1..n {
                if !seen.contains(&(u, v)) {
                    order.push((u, v));
                }
            }
        }
        order.shuffle(rng);
    }
    Ok(MultiGraph::from_edge_list(n, &order)?)
}

/// The `k`-core: its vertices in increasing order, the induced subgraph
/// renumbered accordingly, and the new-to-old vertex map.
#[derive(Clone, Debug)]
pub struct KCore {
    pub vertices: Vec<usize>,
    pub graph: MultiGraph,
}

impl KCore {
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Membership mask of the `k`-core by queue-based peeling in `O(n + m)`.
/// Degrees count multi-edges with multiplicity and loops twice.
#[must_use]
pub fn k_core_mask(g: &MultiGraph, k: usize) -> Vec<bool> {
    let mut deg = g.degrees();
    let mut alive = vec![true; g.n()];
    let mut queue: VecDeque<usize> = (0..g.n()).filter(|&v| deg[v] < k).collect();
    for &v in &queue {
        alive[v] = false;
    }
    while let Some(v) = queue.pop_front() {
        for u in g.neighbors(v) {
            if alive[u] {
                deg[u] -= 1;
                if deg[u] < k {
                    alive[u] = false;
                    queue.push_back(u);
                }
            }
        }
    }
    alive
}

#[must_use]
pub fn k_core(g: &MultiGraph, k: usize) -> KCore {
    let mask = k_core_mask(g, k);
    let (graph, vertices) = g.induced(&mask);
    KCore { vertices, graph }
}

/// Outcome of running the random graph process until a `(k+1)`-core appears.
#[derive(Clone, Debug)]
pub struct ProcessResult {
    /// Number of edges at the hitting time.
    pub sigma: usize,
    /// The graph at the hitting time.
    pub graph: MultiGraph,
    pub core: KCore,
}

/// Adds uniform random new edges one at a time and stops at the first
/// prefix whose `(k+1)`-core is nonempty.
///
/// Core nonemptiness is monotone along the process, so the hitting index is
/// located by doubling the prefix length and then bisecting, each probe a
/// linear-time peel of one prefix.
pub fn process_until_core<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<ProcessResult, GenerateError> {
    let max = max_pairs(n);
    let order_k = k + 1;
    let mut order = Vec::new();
    let mut seen = HashSet::new();
    let prefix_has_core = |order: &[(usize, usize)], len: usize| -> bool {
        let g = MultiGraph::from_edge_list(n, &order[..len]).expect("vertices in range");
        k_core_mask(&g, order_k).iter().any(|&b| b)
    };
    let mut lo = 0;
    let mut hi = n.max(1).min(max);
    loop {
        if hi == 0 {
            return Err(GenerateError::Exhausted(max));
        }
        extend_distinct(n, hi, &mut order, &mut seen, rng);
        if prefix_has_core(&order, hi) {
            break;
        }
        if hi == max {
            return Err(GenerateError::Exhausted(max));
        }
        lo = hi;
        hi = (2 * hi).min(max);
    }
    // Invariant: prefix `lo` has no core, prefix `hi` has one.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if prefix_has_core(&order, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let graph = MultiGraph::from_edge_list(n, &order[..hi])?;
    let core = k_core(&graph, order_k);
    Ok(ProcessResult { sigma: hi, graph, core })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::exp_tail;
    use crate::rng::stream;

    #[test]
    fn early_abort_pairing_is_uniform_over_simple_graphs() {
        // Degrees (2, 2, 2, 2) admit exactly three simple graphs, the 4-cycles.
        let mut rng = stream(11, "pair");
        let mut counts = std::collections::HashMap::new();
        let mut done = 0;
        while done < 6000 {
            if let Some(mut pairs) = pair_until_defect(&[2, 2, 2, 2], &mut rng) {
                for p in &mut pairs {
                    *p = (p.0.min(p.1), p.0.max(p.1));
                }
                pairs.sort_unstable();
                *counts.entry(pairs).or_insert(0usize) += 1;
                done += 1;
            }
        }
        assert_eq!(counts.len(), 3);
        assert!(counts.values().all(|&c| c.abs_diff(2000) < 200), "{counts:?}");
    }

    #[test]
    fn simple_sampler_output_is_simple() {
        let g = sample_simple_min_degree_graph(3000, 6000, 2, 1000, &mut stream(12, "s")).unwrap();
        assert!(is_simple(&g));
        assert_eq!(g.m(), 6000);
        assert!(g.degrees().iter().all(|&d| d >= 3));
    }

    #[test]
    fn zero_rate_returns_floor() {
        let mut rng = stream(1, "tp");
        for _ in 0..100 {
            assert_eq!(sample_truncated_poisson(0.0, 3, &mut rng), 3);
        }
        assert_eq!(sample_truncated_poisson(1e-300, 3, &mut rng), 3);
    }

    #[test]
    fn floor_one_at_rate_one() {
        let law = TruncatedPoisson::new(1.0, 1);
        let mut rng = stream(2, "tp");
        let draws = 100_000;
        let hits = (0..draws).filter(|_| law.sample(&mut rng) == 1).count();
        let p = 1.0 / (std::f64::consts::E - 1.0);
        let sd = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((hits as f64 / draws as f64 - p).abs() < 3.0 * sd);
    }

    #[test]
    fn floor_zero_is_plain_poisson() {
        let law = TruncatedPoisson::new(2.0, 0);
        let mut rng = stream(3, "tp");
        let draws = 100_000;
        let mean = (0..draws).map(|_| law.sample(&mut rng) as f64).sum::<f64>() / draws as f64;
        assert!((mean - 2.0).abs() < 3.0 * (2.0 / draws as f64).sqrt());
    }

    #[test]
    fn forced_cubic_sequence() {
        let mut rng = stream(4, "gen");
        let g = sample_min_degree_graph(4, 6, 2, &mut rng).unwrap();
        assert_eq!(g.degrees(), vec![3; 4]);
        assert_eq!(g.m(), 6);
    }

    #[test]
    fn infeasible_rejected() {
        let mut rng = stream(4, "gen");
        assert!(matches!(
            sample_min_degree_graph(10, 14, 2, &mut rng),
            Err(GenerateError::Infeasible { twice_m: 28, floor: 30 })
        ));
    }

    #[test]
    fn fixed_degree_vertex_keeps_its_degree() {
        let mut dc = DegreeConstraint::new(2);
        dc.set(2, 1, 1);
        dc.set(2, 3, 50);
        let mut rng = stream(5, "gen");
        for _ in 0..50 {
            let g = sample_constrained_sequence(&dc, 100, &mut rng).unwrap();
            assert_eq!(g.degree(0), 1);
            assert_eq!(g.m(), 100);
            assert!((1..51).all(|v| g.degree(v) >= 3));
        }
    }

    #[test]
    fn mixed_constraint_marginal_chi_square() {
        let mut dc = DegreeConstraint::new(2);
        dc.set(1, 2, 100);
        dc.set(2, 3, 100);
        dc.set(2, 1, 20);
        dc.set(0, 0, 5);
        let m = 420;
        let rate = solve_lambda(&dc, m).unwrap().lambda;
        let mut rng = stream(6, "gen");
        // Cells 2, 3, 4, 5, >=6 for the free vertices of label 1.
        let mut observed = [0f64; 5];
        let samples = 400;
        for _ in 0..samples {
            let s = sample_degrees(&dc, m, &mut rng).unwrap();
            assert_eq!(s.degrees.iter().sum::<usize>(), 2 * m as usize);
            for &d in &s.degrees[5..105] {
                observed[(d - 2).min(4)] += 1.0;
            }
        }
        let total = observed.iter().sum::<f64>();
        let pmf = |r: u32| rate.powi(r as i32) / (1..=r).map(f64::from).product::<f64>() / exp_tail(2, rate);
        let mut expected: Vec<f64> = (2..6).map(|r| pmf(r) * total).collect();
        expected.push(total - expected.iter().sum::<f64>());
        let chi2: f64 = observed.iter().zip(&expected).map(|(o, e)| (o - e).powi(2) / e).sum();
        assert!(chi2 < 13.28, "chi2 = {chi2}");
    }

    #[test]
    fn gnm_distinct_pairs() {
        let mut rng = stream(7, "gnm");
        let g = gnm(30, 100, &mut rng).unwrap();
        assert_eq!(g.m(), 100);
        assert!(is_simple(&g));
        let dense = gnm(10, 40, &mut rng).unwrap();
        assert_eq!(dense.m(), 40);
        assert!(is_simple(&dense));
        assert!(matches!(gnm(4, 7, &mut rng), Err(GenerateError::TooDense { .. })));
    }

    #[test]
    fn core_examples() {
        let path = MultiGraph::from_edge_list(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        assert!(k_core(&path, 2).is_empty());
        let cycle = MultiGraph::from_edge_list(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        assert_eq!(k_core(&cycle, 2).vertices, vec![0, 1, 2, 3, 4]);
        let k4e = MultiGraph::from_edge_list(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        let core = k_core(&k4e, 2);
        assert_eq!(core.vertices.len(), 4);
        assert_eq!(core.graph.m(), 5);
    }

    #[test]
    fn empty_graph_has_empty_core() {
        for k in 1..4 {
            assert!(k_core(&MultiGraph::new(6), k).is_empty());
        }
    }

    /// Index of the first edge closing a cycle, by union-find.
    fn first_cycle(pairs: &[(usize, usize)], n: usize) -> Option<usize> {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for (i, &(u, v)) in pairs.iter().enumerate() {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a == b {
                return Some(i + 1);
            }
            parent[a] = b;
        }
        None
    }

    #[test]
    fn two_core_hits_at_first_cycle() {
        for seed in 0..20 {
            let mut rng = stream(seed, "process");
            let res = process_until_core(5, 1, &mut rng).unwrap();
            let pairs = res.graph.edge_list();
            assert_eq!(first_cycle(&pairs, 5), Some(res.sigma));
            assert!(!res.core.is_empty());
        }
    }

    #[test]
    fn process_exhausts_on_tiny_graphs() {
        let mut rng = stream(1, "process");
        assert_eq!(process_until_core(3, 2, &mut rng).unwrap_err(), GenerateError::Exhausted(3));
    }
}
