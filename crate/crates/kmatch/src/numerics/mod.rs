//! Truncated-Poisson special functions and the degree-model rate equation.
//!
//! Most quantities are expressed through the normalized tail
//! `h(l, x) = sum_{j>=0} x^j l! / (l+j)!`, which equals `f_l(x) l! / x^l`.
//! Its terms are positive, so it is well conditioned everywhere, and it makes
//! `lambda_l(x) - x = l / h(l, x)` available without cancellation.

mod alpha;
mod certify;
mod constraint;

pub use alpha::{compute_alphas, AlphaEntry, AlphaGrid, AlphaTable, IncrementRule};
pub use certify::{certify_inequalities, CertifyConfig, CertifyRow};
pub use constraint::{solve_lambda, DegreeConstraint, LambdaSolution};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("infeasible degree constraint: 2m - R = {available} is below the free-vertex floor {floor}")]
    Infeasible { available: f64, floor: f64 },
    #[error("degree constraint has no free vertices")]
    NoFreeVertices,
    #[error("rate equation did not converge: residual {residual:e} at lambda = {lambda}")]
    NoConvergence { lambda: f64, residual: f64 },
}

/// Relative size below which series terms are dropped.
const SERIES_CUTOFF: f64 = 1e-18;
/// Largest rate for which the normalized tails stay finite in `f64`.
pub const MAX_RATE: f64 = 700.0;

/// Double-length accumulator built on the error-free two-sum.
#[derive(Clone, Copy, Debug, Default)]
struct Compensated {
    hi: f64,
    lo: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let bp = s - self.hi;
        let err = (self.hi - (s - bp)) + (x - bp);
        self.hi = s;
        self.lo += err;
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// `h(l, x) = sum_{j>=0} x^j l!/(l+j)!`, summed with a compensated
/// accumulator. Finite for `x <= MAX_RATE`.
#[must_use]
pub fn normalized_tail(l: u32, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    let mut acc = Compensated { hi: 1.0, lo: 0.0 };
    let mut term = 1.0;
    let past_peak = x - f64::from(l);
    let mut j = 0u32;
    loop {
        j += 1;
        term *= x / f64::from(l + j);
        acc.add(term);
        if f64::from(j) > past_peak && term < SERIES_CUTOFF * acc.hi {
            break acc.value();
        }
    }
}

/// `x^n / n!` by a running product.
fn power_over_factorial(x: f64, n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * x / f64::from(i))
}

/// `f_k(x) = e^x - sum_{i<k} x^i / i!`, the tail of the exponential series.
///
/// Below `x = k` the tail is summed directly (compensated); above it the
/// subtraction loses at most a factor `1 / P(Po(x) >= k) <= 2`.
#[must_use]
pub fn exp_tail(k: u32, x: f64) -> f64 {
    if k == 0 {
        return x.exp();
    }
    if x == 0.0 {
        return 0.0;
    }
    if x < f64::from(k) {
        power_over_factorial(x, k) * normalized_tail(k, x)
    } else {
        let head: f64 = (0..k).map(|i| power_over_factorial(x, i)).sum();
        x.exp() - head
    }
}

/// `lambda_l(x) - x`, the excess of the truncated mean over the rate.
#[must_use]
pub fn mean_excess(l: u32, x: f64) -> f64 {
    if l == 0 {
        0.0
    } else {
        f64::from(l) / normalized_tail(l, x)
    }
}

/// Mean of `Po(x)` conditioned on being at least `l`; equals `l` at `x = 0`.
#[must_use]
pub fn lambda_mean(l: u32, x: f64) -> f64 {
    x + mean_excess(l, x)
}

/// `P(Po_{>=l}(x) = r)`.
#[must_use]
pub fn truncated_pmf(l: u32, x: f64, r: u32) -> f64 {
    if r < l {
        return 0.0;
    }
    let rise = (l + 1..=r).fold(1.0, |acc, i| acc * x / f64::from(i));
    rise / normalized_tail(l, x)
}

/// Size-biased weight `r P(Po_{>=l}(x) = r) / lambda_l(x)`; zero for `r < l`.
#[must_use]
pub fn q(l: u32, r: u32, x: f64) -> f64 {
    if r < l {
        return 0.0;
    }
    if r == l {
        return f64::from(l) / (x * normalized_tail(l, x) + f64::from(l));
    }
    f64::from(r) * truncated_pmf(l, x, r) / lambda_mean(l, x)
}

/// `a lambda_{r+1} - (a+1) lambda_r + lambda_{r-1}`, evaluated on the mean
/// excesses so the `x` terms cancel exactly.
#[must_use]
pub fn g(r: u32, x: f64, a: f64) -> f64 {
    debug_assert!(r >= 1);
    a * mean_excess(r + 1, x) - (a + 1.0) * mean_excess(r, x) + mean_excess(r - 1, x)
}

/// All normalized tails `h(0..=top, x)` at one rate.
///
/// The top order is summed as a series and the rest follow from the stable
/// downward recursion `h(l-1) = 1 + x h(l) / l`.
#[derive(Clone, Debug)]
pub struct TailLadder {
    x: f64,
    tails: Vec<f64>,
}

impl TailLadder {
    #[must_use]
    pub fn new(x: f64, top: u32) -> Self {
        let mut tails = vec![0.0; top as usize + 1];
        tails[top as usize] = normalized_tail(top, x);
        for l in (1..=top).rev() {
            tails[l as usize - 1] = 1.0 + x * tails[l as usize] / f64::from(l);
        }
        Self { x, tails }
    }

    #[must_use]
    pub fn rate(&self) -> f64 {
        self.x
    }

    #[must_use]
    pub fn excess(&self, l: u32) -> f64 {
        if l == 0 {
            0.0
        } else {
            f64::from(l) / self.tails[l as usize]
        }
    }

    #[must_use]
    pub fn mean(&self, l: u32) -> f64 {
        self.x + self.excess(l)
    }

    /// `q_{l,l}`.
    #[must_use]
    pub fn q_diag(&self, l: u32) -> f64 {
        f64::from(l) / (self.x * self.tails[l as usize] + f64::from(l))
    }

    #[must_use]
    pub fn g(&self, r: u32, a: f64) -> f64 {
        a * self.excess(r + 1) - (a + 1.0) * self.excess(r) + self.excess(r - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent reference: terms built from logarithms and summed from
    /// the smallest upward over 200 terms.
    fn reference_tail(k: u32, x: f64) -> f64 {
        let ln_fact = |n: u32| (1..=n).map(|i| f64::from(i).ln()).sum::<f64>();
        let mut terms: Vec<f64> = (k..k + 200)
            .map(|i| (f64::from(i) * x.ln() - ln_fact(i)).exp())
            .collect();
        terms.sort_by(f64::total_cmp);
        terms.iter().sum()
    }

    #[test]
    fn order_zero_is_exponential() {
        for x in [0.0, 0.3, 2.0, 17.5] {
            assert_eq!(exp_tail(0, x), x.exp());
        }
    }

    #[test]
    fn vanishes_at_zero() {
        for k in 1..6 {
            assert_eq!(exp_tail(k, 0.0), 0.0);
        }
    }

    #[test]
    fn first_order_at_one() {
        assert!((exp_tail(1, 1.0) - (std::f64::consts::E - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn tail_matches_reference() {
        let mut worst: f64 = 0.0;
        for k in 1..=20u32 {
            for i in 0..=120 {
                let x = if i == 0 { 1e-6 } else { f64::from(i) * 0.5 };
                let (a, b) = (exp_tail(k, x), reference_tail(k, x));
                worst = worst.max(((a - b) / b).abs());
            }
        }
        assert!(worst <= 1e-12, "worst relative error {worst:e}");
    }

    #[test]
    fn mean_at_zero_is_floor() {
        for r in 0..30 {
            assert_eq!(lambda_mean(r, 0.0), f64::from(r));
        }
    }

    #[test]
    fn mean_closed_form_order_one() {
        let x = std::f64::consts::LN_2;
        assert!((lambda_mean(1, x) - 2.0 * x).abs() < 1e-14);
    }

    #[test]
    fn mean_bounds_and_monotonicity() {
        for r in 1..=30u32 {
            for i in 0..=2000 {
                let x = f64::from(i) * 0.01;
                let lr = lambda_mean(r, x);
                let lprev = lambda_mean(r - 1, x);
                let tol = 1e-12 * (1.0 + x);
                assert!(lr + tol >= x.max(f64::from(r)), "lower bound r={r} x={x}");
                assert!(lr <= x + f64::from(r) + tol, "upper bound r={r} x={x}");
                assert!(lprev <= lr + tol, "monotone r={r} x={x}");
                assert!(lr <= lprev + f64::from(r) + tol, "step r={r} x={x}");
            }
        }
    }

    #[test]
    fn q_diag_limit_and_order_one() {
        for l in 1..8 {
            assert!((q(l, l, 1e-12) - 1.0).abs() < 1e-11);
        }
        for x in [0.5, 1.0, 2.0] {
            assert!((q(1, 1, x) - (-x).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn q_normalizes() {
        for l in 1..6u32 {
            for x in [0.1, 1.0, 5.0, 12.0, 20.0] {
                let total: f64 = (l..=200).map(|r| q(l, r, x)).sum();
                assert!((total - 1.0).abs() < 1e-10, "l={l} x={x} total={total}");
            }
        }
        assert_eq!(q(3, 2, 1.0), 0.0);
    }

    #[test]
    fn g_at_zero() {
        for r in 2..20 {
            for a in [1.5, 1.55, 1.6] {
                assert!((g(r, 0.0, a) - (a - 1.0)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn ladder_agrees_with_direct() {
        for x in [0.0, 0.4, 3.0, 25.0, 66.0] {
            let ladder = TailLadder::new(x, 30);
            for l in 0..=30 {
                let d = lambda_mean(l, x);
                assert!((ladder.mean(l) - d).abs() <= 1e-12 * d.max(1.0), "l={l} x={x}");
            }
            assert!((ladder.g(5, 1.55) - g(5, x, 1.55)).abs() < 1e-12);
        }
    }

    #[test]
    fn pmf_sums_to_one() {
        let total: f64 = (3..200).map(|r| truncated_pmf(3, 2.5, r)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((truncated_pmf(1, 1.0, 1) - 1.0 / (std::f64::consts::E - 1.0)).abs() < 1e-15);
    }
}
