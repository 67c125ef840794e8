//! Randomized greedy k-matching that serves dangerous vertices first.
//!
//! Every vertex carries a label, the number of partners it may still take.
//! A vertex is dangerous when its remaining degree is positive but no larger
//! than its label. Each step picks a dangerous vertex with probability
//! proportional to degree (or, when there is none, a positive-degree vertex
//! of maximum label), matches it along a uniform incident edge, and deletes
//! every edge at a vertex whose label drops to zero.
//!
//! Vertices live in buckets `Y[l][j]` keyed by label and current degree, so
//! both selection rules are a weighted scan over at most `k * Delta` bucket
//! sizes followed by one index computation.

use crate::graph::{EdgeId, MultiGraph};
use crate::matching::KMatching;
use crate::numerics::AlphaTable;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TinfError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("invariant violated at step {step}: {detail}")]
    Invariant { step: usize, detail: String },
    #[error("no selectable vertex at step {step} although edges remain")]
    Stuck { step: usize },
}

/// Run options. Thresholds of the stopping times are exposed with their
/// default values.
#[derive(Clone, Debug, PartialEq)]
pub struct TinfConfig {
    /// Record per-step trace rows.
    pub trace: bool,
    /// Record every `stride`-th step; `None` picks 1 up to `10^5` vertices and
    /// 16 beyond.
    pub stride: Option<usize>,
    /// Recount all buckets and labels every this many steps.
    pub check_every: Option<usize>,
    /// Edge-count threshold `n^e` of the stopping times.
    pub edge_exponent: f64,
    /// `zeta` threshold `log(n)^p` of the stopping times.
    pub zeta_log_power: f64,
    /// Steps per drift window.
    pub drift_window: usize,
}

impl Default for TinfConfig {
    fn default() -> Self {
        Self {
            trace: false,
            stride: None,
            check_every: None,
            edge_exponent: 0.4 + 1e-5,
            zeta_log_power: 6.0,
            drift_window: 10_000,
        }
    }
}

/// Vertices served ahead of the normal rule on a fixed period.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Priority {
    pub members: Vec<usize>,
    /// Every `period`-th step draws from the members.
    pub period: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: usize,
    pub m: usize,
    pub zeta: u64,
    pub index: usize,
    pub s: u32,
    pub mult: u32,
    pub h: u32,
    /// `p_1..=p_{k+1}`.
    pub p: Vec<f64>,
}

/// Mean change of `zeta` over the steps of one window that started with
/// `zeta > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DriftWindow {
    pub start: usize,
    pub samples: usize,
    pub mean: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TinfTrace {
    pub stride: usize,
    pub records: Vec<TraceRecord>,
    /// Number of steps until the graph ran out of edges.
    pub tau: usize,
    pub tau_prime: Option<usize>,
    /// `tau_l` for `l = 2..=k`, at index `l - 2`.
    pub tau_ell: Vec<Option<usize>>,
    pub t_star: usize,
    pub p_at_t_star: Option<Vec<f64>>,
    pub drift: Vec<DriftWindow>,
}

/// Counters of a finished run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TinfStats {
    pub steps: usize,
    /// Half-edge touches: two per deleted edge plus two per step.
    pub touches: usize,
    pub initial_m: usize,
    pub initial_max_degree: usize,
    /// `sum_v max(0, k - d_0(v))`.
    pub initial_deficit: usize,
    /// `sum_t (s_t + mult_t + 2 h_t)` with `s_t` counted in degree units, see
    /// [`StepReport::s_units`].
    pub loss_sum: usize,
    /// The same sum with the vertex count `s_t`.
    pub literal_loss_sum: usize,
    /// Pairs added before loops and repeats were stripped.
    pub raw_size: usize,
    pub loops_removed: usize,
    pub repeats_removed: usize,
    pub max_zeta_jump: u64,
    pub priority_steps: usize,
    /// First priority step that found every priority member without edges.
    pub priority_cleared: Option<usize>,
}

impl TinfStats {
    /// The accounting inequality `kn - deficit - sum(s + mult + 2h) <= 2|M_raw|`.
    #[must_use]
    pub fn ledger_holds(&self, n: usize, k: usize) -> bool {
        (k * n) as i64 - self.initial_deficit as i64 - self.loss_sum as i64 <= 2 * self.raw_size as i64
    }

    /// The inequality with the vertex count `s_t`; it can fail when one vertex
    /// loses two edges to two saturating vertices in the same step.
    #[must_use]
    pub fn literal_ledger_holds(&self, n: usize, k: usize) -> bool {
        (k * n) as i64 - self.initial_deficit as i64 - self.literal_loss_sum as i64 <= 2 * self.raw_size as i64
    }
}

#[derive(Clone, Debug)]
pub struct TinfOutcome {
    pub matching: KMatching,
    pub trace: TinfTrace,
    pub stats: TinfStats,
}

/// Per-step quantities of the accounting inequality.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepReport {
    pub v: usize,
    pub w: usize,
    /// Vertices that kept their label and moved from `Y_{l,j}` to `Y_{l,j-1}`
    /// with `1 <= j <= l`.
    pub s: u32,
    /// Degree units lost at or below the label by vertices that kept their
    /// label: `max(0, min(d, l) - d')` summed over them. Equals `s` unless a
    /// vertex lost two or more edges in one step.
    pub s_units: u32,
    pub mult: u32,
    pub h: u32,
    pub deleted: usize,
}

const NONE: u32 = u32::MAX;

/// Mutable state of one run.
#[derive(Clone, Debug)]
pub struct TinfState {
    g: MultiGraph,
    k: usize,
    label: Vec<u32>,
    deg: Vec<u32>,
    /// Raw matched degree; a loop counts once.
    matched: Vec<u32>,
    buckets: Vec<Vec<Vec<u32>>>,
    pos: Vec<u32>,
    /// Half-edge weight of each label.
    weight: Vec<u64>,
    /// Dangerous half-edge weight of each label.
    danger: Vec<u64>,
    /// `|Y_l|`: vertices of label `l` with degree above `l`.
    free: Vec<u64>,
    zeta: u64,
    top: usize,
    raw: Vec<(u32, u32)>,
    touched: Vec<(u32, u32, u32)>,
    stamp: Vec<u32>,
    epoch: u32,
    prio: Vec<u32>,
    max_degree: usize,
}

impl TinfState {
    pub fn new(g: MultiGraph, k: usize) -> Result<Self, TinfError> {
        if k == 0 {
            return Err(TinfError::ZeroK);
        }
        let n = g.n();
        let max_degree = g.max_degree();
        let mut st = Self {
            k,
            label: vec![k as u32; n],
            deg: g.degrees().into_iter().map(|d| d as u32).collect(),
            matched: vec![0; n],
            buckets: (0..=k).map(|_| vec![Vec::new(); max_degree + 1]).collect(),
            pos: vec![NONE; n],
            weight: vec![0; k + 1],
            danger: vec![0; k + 1],
            free: vec![0; k + 1],
            zeta: 0,
            top: k,
            raw: Vec::new(),
            touched: Vec::new(),
            stamp: vec![0; n],
            epoch: 1,
            prio: Vec::new(),
            max_degree,
            g,
        };
        for v in 0..n {
            st.insert(v);
        }
        Ok(st)
    }

    #[must_use]
    pub fn graph(&self) -> &MultiGraph {
        &self.g
    }

    #[must_use]
    pub fn k(&self) -> usize {
        self.k
    }

    #[must_use]
    pub fn label(&self, v: usize) -> usize {
        self.label[v] as usize
    }

    /// `zeta_t`: total degree of the dangerous vertices.
    #[must_use]
    pub fn zeta(&self) -> u64 {
        self.zeta
    }

    /// `|Y_{l,j}|`.
    #[must_use]
    pub fn bucket_len(&self, l: usize, j: usize) -> usize {
        self.buckets[l].get(j).map_or(0, Vec::len)
    }

    /// Largest label carried by a positive-degree vertex (0 when no edges
    /// remain).
    #[must_use]
    pub fn index(&self) -> usize {
        (1..=self.k).rev().find(|&l| self.weight[l] > 0).unwrap_or(0)
    }

    /// `p_1..=p_{k+1}`: the half-edge mass of `Y_l` for each label, over
    /// `2 m_t`. `p_{k+1}` is always zero since no label exceeds `k`.
    #[must_use]
    pub fn p_vector(&self) -> Option<Vec<f64>> {
        let total = 2 * self.g.m();
        if total == 0 {
            return None;
        }
        let mut p: Vec<f64> = (1..=self.k)
            .map(|l| (self.weight[l] - self.danger[l]) as f64 / total as f64)
            .collect();
        p.push(0.0);
        Some(p)
    }

    /// `|Y_l|` for a label.
    #[must_use]
    pub fn free_count(&self, l: usize) -> u64 {
        self.free[l]
    }

    fn contribution(&mut self, l: usize, d: usize, sign: i64) {
        let d64 = d as u64;
        let apply = |x: &mut u64, by: u64| {
            if sign > 0 {
                *x += by;
            } else {
                *x -= by;
            }
        };
        apply(&mut self.weight[l], d64);
        if l >= 1 && (1..=l).contains(&d) {
            apply(&mut self.danger[l], d64);
            apply(&mut self.zeta, d64);
        }
        if d > l {
            apply(&mut self.free[l], 1);
        }
    }

    fn insert(&mut self, v: usize) {
        let (l, d) = (self.label[v] as usize, self.deg[v] as usize);
        let bucket = &mut self.buckets[l][d];
        self.pos[v] = bucket.len() as u32;
        bucket.push(v as u32);
        self.contribution(l, d, 1);
    }

    fn remove(&mut self, v: usize) {
        let (l, d) = (self.label[v] as usize, self.deg[v] as usize);
        let bucket = &mut self.buckets[l][d];
        let at = self.pos[v] as usize;
        bucket.swap_remove(at);
        if let Some(&moved) = bucket.get(at) {
            self.pos[moved as usize] = at as u32;
        }
        self.pos[v] = NONE;
        self.contribution(l, d, -1);
    }

    fn touch(&mut self, v: usize) {
        if self.stamp[v] != self.epoch {
            self.stamp[v] = self.epoch;
            self.touched.push((v as u32, self.label[v], self.deg[v]));
        }
    }

    /// Degree-proportional draw from the dangerous vertices, or from the
    /// positive-degree vertices of maximum label when none is dangerous.
    pub fn select_vertex<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<usize> {
        if self.zeta > 0 {
            let mut r = rng.gen_range(0..self.zeta);
            for l in 1..=self.k {
                if r >= self.danger[l] {
                    r -= self.danger[l];
                    continue;
                }
                for j in 1..=l.min(self.max_degree) {
                    let w = (j * self.buckets[l][j].len()) as u64;
                    if r < w {
                        return Some(self.buckets[l][j][(r / j as u64) as usize] as usize);
                    }
                    r -= w;
                }
            }
            unreachable!("dangerous weight out of sync");
        }
        while self.top > 0 && self.weight[self.top] == 0 {
            self.top -= 1;
        }
        if self.top == 0 {
            return None;
        }
        let l = self.top;
        let mut r = rng.gen_range(0..self.weight[l]);
        for j in l + 1..=self.max_degree {
            let w = (j * self.buckets[l][j].len()) as u64;
            if r < w {
                return Some(self.buckets[l][j][(r / j as u64) as usize] as usize);
            }
            r -= w;
        }
        unreachable!("label weight out of sync");
    }

    /// Degree-proportional draw from the priority list by rejection against
    /// the initial maximum degree; members that ran out of edges are dropped.
    fn select_priority<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<usize> {
        while !self.prio.is_empty() {
            let i = rng.gen_range(0..self.prio.len());
            let u = self.prio[i] as usize;
            if self.deg[u] == 0 {
                self.prio.swap_remove(i);
                continue;
            }
            if rng.gen_range(0..self.max_degree) < self.deg[u] as usize {
                return Some(u);
            }
        }
        None
    }

    /// Sum of the multiplicities of parallel classes (size at least two) of
    /// non-loop edges at `x`.
    fn parallel_mass(&self, x: usize) -> u32 {
        let mut nb: Vec<usize> = self.g.neighbors(x).filter(|&u| u != x).collect();
        nb.sort_unstable();
        let mut mass = 0;
        let mut i = 0;
        while i < nb.len() {
            let run = nb[i..].iter().take_while(|&&u| u == nb[i]).count();
            if run >= 2 {
                mass += run as u32;
            }
            i += run;
        }
        mass
    }

    /// Matches `v` along a uniform incident edge and applies the cascade.
    pub fn step_from<R: Rng + ?Sized>(&mut self, v: usize, rng: &mut R) -> StepReport {
        let e = self.g.random_incident_edge(v, rng).expect("selected vertex has edges");
        let w = self.g.other_end(e, v);
        self.touch(v);
        self.touch(w);
        let h = v == w;
        let mut saturating = Vec::with_capacity(2);
        if self.label[v] == 1 {
            saturating.push(v);
        }
        if !h && self.label[w] == 1 {
            saturating.push(w);
        }
        let mult = saturating.iter().map(|&x| self.parallel_mass(x)).sum();

        self.raw.push((v as u32, w as u32));
        self.remove(v);
        self.matched[v] += 1;
        self.label[v] -= 1;
        if h {
            self.deg[v] -= 2;
        } else {
            self.remove(w);
            self.matched[w] += 1;
            self.label[w] -= 1;
            self.deg[v] -= 1;
            self.deg[w] -= 1;
        }
        self.g.delete_edge(e).expect("edge is live");
        let mut deleted = 1;
        self.insert(v);
        if !h {
            self.insert(w);
        }

        for x in saturating {
            let mut inc: Vec<EdgeId> = self.g.incident_edges(x).collect();
            inc.sort_unstable();
            inc.dedup();
            self.remove(x);
            for f in inc {
                let u = self.g.other_end(f, x);
                self.g.delete_edge(f).expect("edge is live");
                deleted += 1;
                if u == x {
                    self.deg[x] -= 2;
                } else {
                    self.touch(u);
                    self.remove(u);
                    self.deg[u] -= 1;
                    self.insert(u);
                    self.deg[x] -= 1;
                }
            }
            self.insert(x);
        }

        let (mut s, mut s_units) = (0, 0);
        for &(u, l0, d0) in &self.touched {
            let (l1, d1) = (self.label[u as usize], self.deg[u as usize]);
            if l0 >= 1 && l1 == l0 {
                s += u32::from((1..=l0).contains(&d0) && d1 + 1 == d0);
                s_units += d0.min(l0).saturating_sub(d1);
            }
        }
        self.touched.clear();
        self.epoch += 1;
        StepReport { v, w, s, s_units, mult, h: u32::from(h), deleted }
    }

    /// Recounts every maintained quantity from scratch.
    pub fn check(&self) -> Result<(), String> {
        let k = self.k;
        let (mut weight, mut danger, mut free, mut zeta) = (vec![0u64; k + 1], vec![0u64; k + 1], vec![0u64; k + 1], 0);
        for v in 0..self.g.n() {
            let (l, d) = (self.label[v] as usize, self.deg[v] as usize);
            if d != self.g.degree(v) {
                return Err(format!("vertex {v}: tracked degree {d} != {}", self.g.degree(v)));
            }
            if l + self.matched[v] as usize != k {
                return Err(format!("vertex {v}: label {l} + matched {} != k", self.matched[v]));
            }
            if l == 0 && d > 0 {
                return Err(format!("vertex {v}: label 0 with degree {d}"));
            }
            let at = self.pos[v] as usize;
            if self.buckets[l][d].get(at) != Some(&(v as u32)) {
                return Err(format!("vertex {v} missing from bucket ({l}, {d})"));
            }
            weight[l] += d as u64;
            if l >= 1 && (1..=l).contains(&d) {
                danger[l] += d as u64;
                zeta += d as u64;
            }
            if d > l {
                free[l] += 1;
            }
        }
        let stored: usize = self.buckets.iter().flatten().map(Vec::len).sum();
        if stored != self.g.n() {
            return Err(format!("buckets hold {stored} vertices, expected {}", self.g.n()));
        }
        if weight != self.weight || danger != self.danger || free != self.free || zeta != self.zeta {
            return Err("bucket counters differ from recount".into());
        }
        if weight.iter().sum::<u64>() != 2 * self.g.m() as u64 {
            return Err("half-edge mass differs from 2m".into());
        }
        Ok(())
    }

    /// Strips loops and repeated pairs from the raw pair list.
    fn into_matching(self) -> (KMatching, usize, usize) {
        let mut m = KMatching::new(self.g.n(), self.k);
        let (mut loops, mut repeats) = (0, 0);
        for &(u, v) in &self.raw {
            let (u, v) = (u as usize, v as usize);
            if u == v {
                loops += 1;
            } else if m.contains(u, v) {
                repeats += 1;
            } else {
                m.insert(u, v).expect("raw degrees never exceed k");
            }
        }
        (m, loops, repeats)
    }
}

/// Stopping-time bookkeeping for one run.
struct Stops {
    edge_limit: f64,
    zeta_limit: f64,
    tau_prime: Option<usize>,
    tau_ell: Vec<Option<usize>>,
}

impl Stops {
    fn observe(&mut self, st: &TinfState, t: usize) {
        let k = st.k;
        let m = st.g.m() as f64;
        let zeta = st.zeta as f64;
        let empty_from = |l: usize| (l..=k).all(|i| st.free[i] == 0);
        if self.tau_prime.is_none() && (m <= self.edge_limit || zeta > self.zeta_limit || empty_from(3.min(k))) {
            self.tau_prime = Some(t);
        }
        for l in 2..=k {
            let slot = &mut self.tau_ell[l - 2];
            if slot.is_none() && (empty_from(l) || m <= self.edge_limit || zeta >= self.zeta_limit) {
                *slot = Some(t);
            }
        }
    }
}

/// Runs the greedy on `g` to exhaustion.
pub fn run<R: Rng + ?Sized>(g: MultiGraph, k: usize, rng: &mut R, cfg: &TinfConfig) -> Result<TinfOutcome, TinfError> {
    run_with_priority(g, k, &Priority::default(), rng, cfg)
}

/// Like [`run`], but every `priority.period`-th step draws `v_t` from the
/// priority members that still have edges, when there are any.
pub fn run_with_priority<R: Rng + ?Sized>(
    g: MultiGraph,
    k: usize,
    priority: &Priority,
    rng: &mut R,
    cfg: &TinfConfig,
) -> Result<TinfOutcome, TinfError> {
    let n = g.n();
    let mut stats = TinfStats {
        initial_m: g.m(),
        initial_max_degree: g.max_degree(),
        initial_deficit: g.degrees().iter().map(|&d| k.saturating_sub(d)).sum(),
        ..TinfStats::default()
    };
    let mut st = TinfState::new(g, k)?;
    st.prio = priority.members.iter().map(|&v| v as u32).collect();
    let period = priority.period.max(1);

    let nf = n.max(2) as f64;
    let c = stats.initial_m as f64 / n.max(1) as f64;
    let t_star = if c > 0.0 { ((1.0 / (40.0 * c * k as f64)).powi(4) * n as f64) as usize } else { 0 };
    let stride = cfg.stride.unwrap_or(if n <= 100_000 { 1 } else { 16 }).max(1);
    let mut trace = TinfTrace { stride, t_star, ..TinfTrace::default() };
    let mut stops = Stops {
        edge_limit: nf.powf(cfg.edge_exponent),
        zeta_limit: nf.ln().powf(cfg.zeta_log_power),
        tau_prime: None,
        tau_ell: vec![None; k.saturating_sub(1)],
    };
    let window = cfg.drift_window.max(1);
    let (mut win_sum, mut win_count) = (0i64, 0usize);

    let mut t = 0;
    while st.g.m() > 0 {
        stops.observe(&st, t);
        if t == t_star {
            trace.p_at_t_star = st.p_vector();
        }
        let zeta_before = st.zeta;
        let mut v = None;
        if (t + 1) % period == 0 && !st.prio.is_empty() {
            v = st.select_priority(rng);
            stats.priority_steps += usize::from(v.is_some());
            if v.is_none() {
                stats.priority_cleared = Some(t);
            }
        }
        let v = match v.or_else(|| st.select_vertex(rng)) {
            Some(v) => v,
            None => return Err(TinfError::Stuck { step: t }),
        };
        let rep = st.step_from(v, rng);
        stats.touches += 2 * rep.deleted + 2;
        stats.loss_sum += (rep.s_units + rep.mult + 2 * rep.h) as usize;
        stats.literal_loss_sum += (rep.s + rep.mult + 2 * rep.h) as usize;
        stats.max_zeta_jump = stats.max_zeta_jump.max(st.zeta.abs_diff(zeta_before));

        if stops.tau_prime.is_none() && zeta_before > 0 {
            win_sum += st.zeta as i64 - zeta_before as i64;
            win_count += 1;
        }
        t += 1;
        if t % window == 0 && win_count > 0 {
            trace.drift.push(DriftWindow { start: t - window, samples: win_count, mean: win_sum as f64 / win_count as f64 });
            (win_sum, win_count) = (0, 0);
        }
        if cfg.trace && (t - 1) % stride == 0 {
            trace.records.push(TraceRecord {
                t: t - 1,
                m: st.g.m(),
                zeta: st.zeta,
                index: st.index(),
                s: rep.s,
                mult: rep.mult,
                h: rep.h,
                p: st.p_vector().unwrap_or_else(|| vec![0.0; k + 1]),
            });
        }
        if let Some(every) = cfg.check_every {
            if t % every.max(1) == 0 {
                st.check().map_err(|detail| TinfError::Invariant { step: t, detail })?;
            }
        }
    }
    if win_count > 0 {
        trace.drift.push(DriftWindow { start: t - t % window, samples: win_count, mean: win_sum as f64 / win_count as f64 });
    }
    if cfg.check_every.is_some() {
        st.check().map_err(|detail| TinfError::Invariant { step: t, detail })?;
    }
    stops.observe(&st, t);
    trace.tau = t;
    trace.tau_prime = stops.tau_prime;
    trace.tau_ell = stops.tau_ell;
    stats.steps = t;
    stats.raw_size = st.raw.len();
    let (matching, loops, repeats) = st.into_matching();
    stats.loops_removed = loops;
    stats.repeats_removed = repeats;
    Ok(TinfOutcome { matching, trace, stats })
}

/// Whether `p` (with `p[i - 1] = p_i`) satisfies `p_r >= alpha_r p_{r-1}` for
/// `2 <= r <= d - 1`.
#[must_use]
pub fn in_polyhedron(p: &[f64], d: usize, alphas: &AlphaTable) -> bool {
    (2..d).all(|r| p[r - 1] >= alphas.alpha(r) * p[r - 2])
}

/// Windows of the drift diagnostic.
#[must_use]
pub fn drift_report(trace: &TinfTrace) -> &[DriftWindow] {
    &trace.drift
}
