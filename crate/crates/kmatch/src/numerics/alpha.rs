//! The confinement constants `alpha_r`.
//!
//! `alpha_2 = 1.55` and `alpha_{r+1} = max(alpha_r, a'_r) + eps_r`, where
//! `a'_r` is the supremum over `x >= 0` of
//! `a - g(r,x)/lambda_{r+1} + 0.55 lambda_1 [(r+1) q_{r+1,r+1} - r q_{r,r}] / ((1.55^e - 1) lambda_{r+1})`
//! with `a = alpha_r`, `e = max(r, 3)`, and `eps_r = 1e-5` for `r <= 24`,
//! `2^-r` beyond. The supremum is taken on a uniform grid over
//! `[0, r + span]` followed by golden-section refinement around the best grid
//! point; the region beyond the grid is covered by [`tail_bound`].

use super::TailLadder;
use crate::par::Exec;
use serde::Serialize;

/// Grid used for each supremum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaGrid {
    pub step: f64,
    pub refine_tol: f64,
    /// The grid covers `[0, r + span]`.
    pub span: f64,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self { step: 1e-3, refine_tol: 1e-6, span: 16.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IncrementRule {
    /// `alpha_2`, fixed.
    Base,
    /// `+1e-5`, used for `r <= 25`.
    Small,
    /// `+2^{-(r-1)}`, used beyond.
    Large,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaEntry {
    pub r: u32,
    pub alpha: f64,
    /// Where the supremum defining this entry was attained (`NaN` for r = 2).
    pub sup_location: f64,
    /// `a'_{r-1} - alpha_{r-1}`: how far the supremum rose above the previous
    /// constant (negative when the previous constant dominates).
    pub sup_excess: f64,
    pub rule: IncrementRule,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaTable {
    entries: Vec<AlphaEntry>,
}

impl AlphaTable {
    /// `alpha_r` for `2 <= r <= r_max`.
    #[must_use]
    pub fn alpha(&self, r: usize) -> f64 {
        self.entries[r - 2].alpha
    }

    #[must_use]
    pub fn r_max(&self) -> usize {
        self.entries.len() + 1
    }

    #[must_use]
    pub fn entries(&self) -> &[AlphaEntry] {
        &self.entries
    }
}

pub(crate) const BASE: f64 = 1.55;
pub(crate) const WEIGHT: f64 = 0.55;

pub(crate) fn denominator(r: u32) -> f64 {
    BASE.powi(r.max(3) as i32) - 1.0
}

/// The bracketed expression whose supremum defines `a'_r`.
pub(crate) fn bracket(r: u32, x: f64, a: f64) -> f64 {
    let t = TailLadder::new(x, r + 1);
    let upper = t.mean(r + 1);
    a - t.g(r, a) / upper
        + WEIGHT * t.mean(1) / (denominator(r) * upper)
            * (f64::from(r + 1) * t.q_diag(r + 1) - f64::from(r) * t.q_diag(r))
}

/// Maximizes `f` on `{i * step : 0 <= i <= count}`; ties go to the smallest
/// index so the result does not depend on the execution mode.
pub(crate) fn grid_max<F>(exec: Exec, count: usize, step: f64, f: F) -> (usize, f64)
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    const CHUNK: usize = 2048;
    let chunks = count / CHUNK + 1;
    exec.map_range(chunks, |c| {
        let (lo, hi) = (c * CHUNK, ((c + 1) * CHUNK).min(count + 1));
        (lo..hi).fold((usize::MAX, f64::NEG_INFINITY), |best, i| {
            let v = f(i as f64 * step);
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
    })
    .into_iter()
    .fold((0, f64::NEG_INFINITY), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        }
    }
    let candidates = [(lo, f(lo)), (a, fa), (b, fb), (hi, f(hi))];
    candidates.into_iter().fold((lo, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

/// Supremum of `f` over `[0, upper]`: grid scan plus local refinement.
pub(crate) fn refined_sup<F>(exec: Exec, upper: f64, grid: AlphaGrid, f: F) -> (f64, f64)
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let count = (upper / grid.step).round() as usize;
    let (i, v) = grid_max(exec, count, grid.step, &f);
    let lo = (i.saturating_sub(1)) as f64 * grid.step;
    let hi = ((i + 1).min(count)) as f64 * grid.step;
    let (x, fx) = golden_max(&f, lo, hi, grid.refine_tol);
    if fx > v {
        (x, fx)
    } else {
        (i as f64 * grid.step, v)
    }
}

/// Analytic bound on `a'_r - a_r` contributed by rates beyond `r + 16`:
/// `0.55 ((16+r)^{r+1}/r!) / ((16+r)^{16+r}/(16+r)!) / (1.55^{max(r,3)} - 1)`.
#[must_use]
pub fn tail_bound(r: u32) -> f64 {
    let ln_fact = |n: u32| (1..=n).map(|i| f64::from(i).ln()).sum::<f64>();
    let top = f64::from(16 + r);
    let ln = WEIGHT.ln() + f64::from(r + 1) * top.ln() - ln_fact(r) - f64::from(16 + r) * top.ln()
        + ln_fact(16 + r);
    ln.exp() / denominator(r)
}

/// Builds `alpha_2..=alpha_{r_max}`.
#[must_use]
pub fn compute_alphas(r_max: usize, grid: AlphaGrid, exec: Exec) -> AlphaTable {
    assert!(r_max >= 2, "r_max must be at least 2");
    let mut entries = vec![AlphaEntry {
        r: 2,
        alpha: BASE,
        sup_location: f64::NAN,
        sup_excess: f64::NAN,
        rule: IncrementRule::Base,
    }];
    for r in 2..r_max as u32 {
        let a = entries.last().expect("seeded").alpha;
        let (loc, sup) = refined_sup(exec, f64::from(r) + grid.span, grid, |x| bracket(r, x, a));
        let (eps, rule) = if r <= 24 {
            (1e-5, IncrementRule::Small)
        } else {
            (0.5f64.powi(r as i32), IncrementRule::Large)
        };
        entries.push(AlphaEntry {
            r: r + 1,
            alpha: a.max(sup) + eps,
            sup_location: loc,
            sup_excess: sup - a,
            rule,
        });
    }
    AlphaTable { entries }
}
