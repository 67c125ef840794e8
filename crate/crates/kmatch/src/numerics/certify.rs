//! Grid certification of the drift inequalities.
//!
//! Each row reports the worst margin of one inequality family member; a
//! positive margin means the inequality held everywhere on the grid. Margins
//! are diagnostics, never errors: a negative value is reported as is.

use super::alpha::{self, denominator, golden_max, grid_max, tail_bound, AlphaGrid, AlphaTable, BASE, WEIGHT};
use super::{g, TailLadder};
use crate::par::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifyConfig {
    pub r_max: usize,
    pub alpha_grid: AlphaGrid,
    /// Step of the nonnegativity scan of `g` over `[0, 5r]`.
    pub g_step: f64,
    /// Rate grid `[0, rate_max]` for the simplex inequalities.
    pub rate_max: f64,
    pub rate_step: f64,
    /// Points per axis of the `p`-simplex grids.
    pub simplex_steps: usize,
    /// Random polyhedron points per `d` for the size-biased sum bound.
    pub polyhedron_samples: usize,
    pub exec: Exec,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            r_max: 50,
            alpha_grid: AlphaGrid::default(),
            g_step: 0.01,
            rate_max: 60.0,
            rate_step: 0.01,
            simplex_steps: 64,
            polyhedron_samples: 256,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertifyRow {
    pub name: &'static str,
    pub r: Option<u32>,
    pub d: Option<u32>,
    pub worst_margin: f64,
    pub argmin_lambda: Option<f64>,
}

impl CertifyRow {
    fn new(name: &'static str, r: Option<u32>, d: Option<u32>, margin: f64, at: Option<f64>) -> Self {
        Self { name, r, d, worst_margin: margin, argmin_lambda: at }
    }
}

/// Upper end of `p_1` on `B_d` with `p` summing to one: `0.55/(1.55^{d-1}-1)`.
fn p1_cap(d: u32) -> f64 {
    WEIGHT / (BASE.powi(d as i32 - 1) - 1.0)
}

/// Minimum of `f` over `[0, upper]` by grid plus refinement.
fn refined_inf<F>(upper: f64, step: f64, f: F) -> (f64, f64)
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let count = (upper / step).round() as usize;
    let (i, v) = grid_max(Exec::Sequential, count, step, |x| -f(x));
    let lo = i.saturating_sub(1) as f64 * step;
    let hi = (i + 1).min(count) as f64 * step;
    let (x, fx) = golden_max(|x| -f(x), lo, hi, 1e-9);
    if fx > v {
        (x, -fx)
    } else {
        (i as f64 * step, -v)
    }
}

/// Minimum of `c0 + c1 p + c2 p^2` over `[0, cap]`.
fn quadratic_min(c0: f64, c1: f64, c2: f64, cap: f64) -> f64 {
    let at = |p: f64| c0 + c1 * p + c2 * p * p;
    let mut best = at(0.0).min(at(cap));
    if c2 > 0.0 {
        let v = -c1 / (2.0 * c2);
        if (0.0..=cap).contains(&v) {
            best = best.min(at(v));
        }
    }
    best
}

fn g_row(name: &'static str, r: u32, a: f64, step: f64) -> CertifyRow {
    let upper = 5.0 * f64::from(r);
    let count = (upper / step).round() as usize;
    let (i, v) = (0..=count).fold((0, f64::INFINITY), |best, i| {
        let val = g(r, i as f64 * step, a);
        if val < best.1 {
            (i, val)
        } else {
            best
        }
    });
    CertifyRow::new(name, Some(r), None, v, Some(i as f64 * step))
}

/// `-1 + sup_{x, p_1} p_1 lambda_1 q_{d+1,d+1} (d p_d^* + sum_{i<d} i 1.55^{i-1} p_1)`
/// with `p_d^* = 1 - sum_{i<d} 1.55^{i-1} p_1`, against the target `-0.001`.
fn small_drift_row(d: u32, cfg: &CertifyConfig) -> CertifyRow {
    let geo: f64 = (1..d).map(|i| BASE.powi(i as i32 - 1)).sum();
    let weighted: f64 = (1..d).map(|i| f64::from(i) * BASE.powi(i as i32 - 1)).sum();
    let cap = p1_cap(d);
    // p_1 (d - d geo p_1 + weighted p_1), maximized over p_1 in [0, cap].
    let best_p = |scale: f64| -quadratic_min(0.0, -f64::from(d) * scale, (f64::from(d) * geo - weighted) * scale, cap);
    let (x, sup) = alpha::refined_sup(
        Exec::Sequential,
        cfg.rate_max,
        AlphaGrid { step: cfg.rate_step, refine_tol: 1e-9, span: 0.0 },
        |x| {
            let t = TailLadder::new(x, d + 1);
            best_p(t.mean(1) * t.q_diag(d + 1))
        },
    );
    let value = -1.0 + sup;
    CertifyRow::new("drift_small_d", None, Some(d), -0.001 - value, Some(x))
}

/// Relaxed stopping-time objective, minimized over `p_1` and the rate;
/// must exceed `1e-5`.
fn stop_lp_row(d: u32, cfg: &CertifyConfig) -> CertifyRow {
    let cap = p1_cap(d);
    let head = d - 3;
    let geo: f64 = (1..=head).map(|i| BASE.powi(i as i32 - 1)).sum();
    let hi = 1.552;
    let objective = |x: f64| {
        let t = TailLadder::new(x, d + 1);
        let l1 = t.mean(1);
        let sum: f64 = (1..=head)
            .map(|i| f64::from(i) * BASE.powi(i as i32 - 1) * t.q_diag(i + 1))
            .sum();
        let a = f64::from(d - 2) / (1.0 + hi) * t.q_diag(d - 1);
        let b = f64::from(d - 1) * hi / (1.0 + hi) * t.q_diag(d);
        // beta = 1 - geo p_1 expands every term into a quadratic in p_1.
        let c0 = 1.0 - hi * hi / (1.0 + hi);
        let c1 = hi * hi / (1.0 + hi) * geo - l1 * (a + b);
        let c2 = -l1 * sum + l1 * (a + b) * geo;
        quadratic_min(c0, c1, c2, cap)
    };
    let (x, opt) = refined_inf(cfg.rate_max, cfg.rate_step, objective);
    CertifyRow::new("stop_lp", None, Some(d), opt - 1e-5, Some(x))
}

/// `p_1 lambda_1 d q_{d+1,d+1} < 1` at the largest admissible `p_1`.
fn stop_lp_aux_row(d: u32, cfg: &CertifyConfig) -> CertifyRow {
    let cap = p1_cap(d);
    let (x, sup) = alpha::refined_sup(
        Exec::Sequential,
        cfg.rate_max,
        AlphaGrid { step: cfg.rate_step, refine_tol: 1e-9, span: 0.0 },
        |x| {
            let t = TailLadder::new(x, d + 1);
            cap * t.mean(1) * f64::from(d) * t.q_diag(d + 1)
        },
    );
    CertifyRow::new("stop_lp_aux", None, Some(d), 1.0 - sup, Some(x))
}

/// Draws a point of `B_d` normalized to sum one over coordinates `1..=d`.
/// Sample 0 is the extreme point with every facet tight and `p_d = 0`.
fn polyhedron_point(d: u32, alphas: &AlphaTable, sample: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut p = vec![0.0; d as usize + 1];
    p[1] = 1.0;
    for i in 2..d as usize {
        let slack = if sample == 0 { 0.0 } else { rng.gen::<f64>().powi(3) * 2.0 };
        p[i] = (alphas.alpha(i) + slack) * p[i - 1];
    }
    p[d as usize] = if sample == 0 || d < 2 { 0.0 } else { rng.gen::<f64>() * p[d as usize - 1] * 3.0 };
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// `p_1 lambda_1 sum_{i<=d} i p_i q_{i+1,i+1} <= 0.55 d (d+1)/(1.55^{d-1}-1)`.
fn size_biased_row(d: u32, alphas: &AlphaTable, cfg: &CertifyConfig) -> CertifyRow {
    let bound = WEIGHT * f64::from(d * (d + 1)) / (BASE.powi(d as i32 - 1) - 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from(d));
    let points: Vec<Vec<f64>> = (0..cfg.polyhedron_samples)
        .map(|s| polyhedron_point(d, alphas, s, &mut rng))
        .collect();
    let count = (cfg.rate_max / cfg.rate_step).round() as usize;
    let mut worst = (f64::NEG_INFINITY, 0.0);
    for i in 0..=count {
        let x = i as f64 * cfg.rate_step;
        let t = TailLadder::new(x, d + 1);
        let weights: Vec<f64> = (1..=d).map(|i| f64::from(i) * t.q_diag(i + 1)).collect();
        for p in &points {
            let s: f64 = weights.iter().zip(&p[1..]).map(|(w, pi)| w * pi).sum();
            let v = p[1] * t.mean(1) * s;
            if v > worst.0 {
                worst = (v, x);
            }
        }
    }
    CertifyRow::new("ipq_bound", None, Some(d), bound - worst.0, Some(worst.1))
}

/// The six-coordinate case inequality on the face
/// `p_5 = 1.56 p_4 + 0.05 p_6`, with `p_2 = alpha_2 p_1`, `p_3 = alpha_3 p_2`.
fn case_six_row(alphas: &AlphaTable, cfg: &CertifyConfig) -> CertifyRow {
    let (a2, a3, a4) = (alphas.alpha(2), alphas.alpha(3), alphas.alpha(4));
    let head = 1.0 + a2 + a2 * a3;
    let steps = cfg.simplex_steps;
    let mut grid = Vec::new();
    for i in 0..=steps {
        let p1 = i as f64 / steps as f64 / (head + a2 * a3 * a4 * 2.56);
        let (p2, p3) = (a2 * p1, a2 * a3 * p1);
        let rest = 1.0 - p1 - p2 - p3;
        let p4_lo = a4 * p3;
        let p4_hi = rest / 2.56;
        if p4_hi < p4_lo {
            continue;
        }
        for j in 0..=steps {
            let p4 = p4_lo + (p4_hi - p4_lo) * j as f64 / steps as f64;
            let p6 = ((rest - 2.56 * p4) / 1.05).max(0.0);
            let p5 = 1.56 * p4 + 0.05 * p6;
            grid.push([0.0, p1, p2, p3, p4, p5, p6]);
        }
    }
    let count = (cfg.rate_max / cfg.rate_step).round() as usize;
    let mut worst = (f64::INFINITY, 0.0);
    for i in 0..=count {
        let x = i as f64 * cfg.rate_step;
        let t = TailLadder::new(x, 7);
        let l1 = t.mean(1);
        for p in &grid {
            let ipq: f64 = (1..=6).map(|i| f64::from(i) * p[i as usize] * t.q_diag(i + 1)).sum();
            let lead = 1.0 + p[6] - p[1] * l1 * ipq;
            let v = lead * (1.05 * t.mean(6) + 0.05) - (2.56 * t.mean(5) + 1.0) * p[5]
                + 1.56 * (t.mean(4) + 1.0) * p[4]
                + p[1] * l1
                    * (-6.0 * p[5] * t.q_diag(5) + 1.56 * 5.0 * p[4] * t.q_diag(5) + 0.05 * 7.0 * p[6] * t.q_diag(7));
            if v < worst.0 {
                worst = (v, x);
            }
        }
    }
    CertifyRow::new("case_six_face", None, Some(6), worst.0, Some(worst.1))
}

fn alpha_rows(alphas: &AlphaTable) -> Vec<CertifyRow> {
    let mut rows = vec![CertifyRow::new("alpha_base", Some(2), None, 0.0 - (alphas.alpha(2) - BASE).abs(), None)];
    for e in &alphas.entries()[1..] {
        let hi = if e.r <= 25 { 1.551 } else { 1.552 };
        rows.push(CertifyRow::new(
            "alpha_band",
            Some(e.r),
            None,
            (e.alpha - BASE).min(hi - e.alpha),
            Some(e.sup_location),
        ));
    }
    for e in alphas.entries().iter().skip(1).filter(|e| e.r <= 25) {
        rows.push(CertifyRow::new(
            "alpha_sup_excess",
            Some(e.r - 1),
            None,
            4e-5 - e.sup_excess,
            Some(e.sup_location),
        ));
    }
    for r in 2..=24u32.min(alphas.r_max() as u32) {
        let top = f64::from(16 + r);
        rows.push(CertifyRow::new("alpha_tail_bound", Some(r), None, 4e-5 - tail_bound(r), Some(top)));
        // The size-biased weight q_{r+1,r+1} decreases in the rate, so its
        // value at the grid end bounds the whole tail interval.
        let direct = WEIGHT * f64::from(r + 1) * TailLadder::new(top, r + 1).q_diag(r + 1) / denominator(r);
        rows.push(CertifyRow::new("alpha_tail_direct", Some(r), None, 4e-5 - direct, Some(top)));
    }
    // The recurrence is stated once with exponent max(r, 3) and once with
    // 3 for r = 2 and r beyond; report the largest disagreement.
    let gap = (2..alphas.r_max() as u32)
        .map(|r| {
            let main = if r == 2 { BASE.powi(3) - 1.0 } else { BASE.powi(r as i32) - 1.0 };
            (denominator(r) - main).abs()
        })
        .fold(0.0, f64::max);
    rows.push(CertifyRow::new("alpha_exponent_forms", None, None, 0.0 - gap, None));
    rows
}

enum Task {
    G { r: u32, base: bool },
    SmallDrift(u32),
    StopLp(u32),
    StopLpAux(u32),
    SizeBiased(u32),
    CaseSix,
}

/// Evaluates every inequality family and returns one row per member.
#[must_use]
pub fn certify_inequalities(alphas: &AlphaTable, cfg: &CertifyConfig) -> Vec<CertifyRow> {
    let r_top = cfg.r_max.min(alphas.r_max()) as u32;
    let mut tasks = Vec::new();
    for r in 2..=r_top {
        tasks.push(Task::G { r, base: false });
        tasks.push(Task::G { r, base: true });
    }
    tasks.extend((3..=10).map(Task::SmallDrift));
    tasks.extend((7..=20).map(Task::StopLp));
    tasks.extend((7..=20).map(Task::StopLpAux));
    tasks.extend((11..=20).filter(|&d| d as usize <= alphas.r_max() + 1).map(Task::SizeBiased));
    if alphas.r_max() >= 4 {
        tasks.push(Task::CaseSix);
    }

    let mut rows = alpha_rows(alphas);
    rows.extend(cfg.exec.map(&tasks, |task| match *task {
        Task::G { r, base: false } => g_row("g_nonneg", r, alphas.alpha(r as usize), cfg.g_step),
        Task::G { r, base: true } => g_row("g_nonneg_base", r, 1.5, cfg.g_step),
        Task::SmallDrift(d) => small_drift_row(d, cfg),
        Task::StopLp(d) => stop_lp_row(d, cfg),
        Task::StopLpAux(d) => stop_lp_aux_row(d, cfg),
        Task::SizeBiased(d) => size_biased_row(d, alphas, cfg),
        Task::CaseSix => case_six_row(alphas, cfg),
    }));
    for d in 11..=20u32 {
        let v = 1.0 - WEIGHT * f64::from(d * (d + 1)) / (BASE.powi(d as i32 - 1) - 1.0);
        rows.push(CertifyRow::new("drift_large_d", None, Some(d), v - 0.001, None));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::compute_alphas;

    fn quick() -> CertifyConfig {
        CertifyConfig {
            r_max: 12,
            alpha_grid: AlphaGrid { step: 1e-2, ..AlphaGrid::default() },
            g_step: 0.05,
            rate_max: 40.0,
            rate_step: 0.05,
            simplex_steps: 16,
            polyhedron_samples: 32,
            exec: Exec::default(),
        }
    }

    #[test]
    fn large_d_scalar_at_twelve() {
        let v = 1.0 - 0.55 * 12.0 * 13.0 / (1.55f64.powi(11) - 1.0);
        assert!(v > 0.001);
    }

    #[test]
    fn quadratic_min_cases() {
        assert_eq!(quadratic_min(1.0, -2.0, 1.0, 3.0), 0.0);
        assert_eq!(quadratic_min(0.0, 1.0, -1.0, 2.0), -2.0);
    }

    #[test]
    fn report_covers_every_family() {
        let cfg = quick();
        let alphas = compute_alphas(20, cfg.alpha_grid, cfg.exec);
        let rows = certify_inequalities(&alphas, &cfg);
        for name in [
            "alpha_base",
            "alpha_band",
            "alpha_tail_bound",
            "alpha_tail_direct",
            "alpha_exponent_forms",
            "g_nonneg",
            "g_nonneg_base",
            "drift_small_d",
            "stop_lp",
            "stop_lp_aux",
            "ipq_bound",
            "case_six_face",
            "drift_large_d",
        ] {
            assert!(rows.iter().any(|r| r.name == name), "missing {name}");
        }
        let base = rows.iter().find(|r| r.name == "alpha_base").unwrap();
        assert_eq!(base.worst_margin, 0.0);
    }

    #[test]
    fn polyhedron_points_satisfy_facets() {
        let alphas = compute_alphas(12, quick().alpha_grid, Exec::Sequential);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for s in 0..50 {
            let p = polyhedron_point(12, &alphas, s, &mut rng);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 2..12 {
                assert!(p[i] >= alphas.alpha(i) * p[i - 1] * (1.0 - 1e-12));
            }
        }
    }
}
