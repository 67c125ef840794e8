//! Degree constraints of the sequence model and the rate equation they induce.

use super::{lambda_mean, NumericsError};
use serde::Serialize;

/// Vertex counts per `(label i, degree class j)` with `0 <= i <= k` and
/// `0 <= j <= i + 1`.
///
/// A vertex in class `(i, j)` with `j <= i` has degree exactly `j`; a vertex
/// in class `(i, i + 1)` is free and has degree at least `i + 1`. Vertex ids
/// are assigned class by class in increasing `(i, j)` order, which fixes the
/// vertex-to-class map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeConstraint {
    counts: Vec<Vec<u64>>,
}

impl DegreeConstraint {
    /// Empty constraint for labels `0..=k`.
    #[must_use]
    pub fn new(k: usize) -> Self {
        Self { counts: (0..=k).map(|i| vec![0; i + 2]).collect() }
    }

    /// `n` free vertices at floor `k + 1`.
    #[must_use]
    pub fn all_free(k: usize, n: u64) -> Self {
        let mut dc = Self::new(k);
        dc.set(k, k + 1, n);
        dc
    }

    #[must_use]
    pub fn k(&self) -> usize {
        self.counts.len() - 1
    }

    #[must_use]
    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, count: u64) {
        self.counts[i][j] = count;
    }

    #[must_use]
    pub fn n(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// `R`, the total degree of the fixed-degree vertices.
    #[must_use]
    pub fn fixed_degree_sum(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, row)| (0..=i).map(|j| j as u64 * row[j]).sum::<u64>())
            .sum()
    }

    /// Number of free vertices with label `i`.
    #[must_use]
    pub fn free(&self, i: usize) -> u64 {
        self.counts[i][i + 1]
    }

    /// Minimum total degree of the free vertices.
    #[must_use]
    pub fn free_floor_sum(&self) -> u64 {
        (0..=self.k()).map(|i| (i as u64 + 1) * self.free(i)).sum()
    }

    /// `(i, j, count)` for every class in vertex-id order.
    pub fn classes(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &c)| (i, j, c)))
    }

    /// Left side of the rate equation: expected free degree at rate `x`.
    #[must_use]
    pub fn expected_free_degree(&self, x: f64) -> f64 {
        (0..=self.k())
            .filter(|&i| self.free(i) > 0)
            .map(|i| self.free(i) as f64 * lambda_mean(i as u32 + 1, x))
            .sum()
    }
}

/// Root of the rate equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaSolution {
    pub lambda: f64,
    pub residual: f64,
    pub iterations: u32,
}

const TOLERANCE: f64 = 1e-12;

/// Solves `sum_i L^i(i+1) lambda_{i+1}(x) = 2m - R` for `x >= 0`.
///
/// The left side is strictly increasing, so bisection on
/// `[0, 2(2m - R)/F + k + 1]` (F the free count) brackets the root; a few
/// Newton steps with a difference quotient then polish the last ulps.
pub fn solve_lambda(dc: &DegreeConstraint, m: u64) -> Result<LambdaSolution, NumericsError> {
    let free: u64 = (0..=dc.k()).map(|i| dc.free(i)).sum();
    if free == 0 {
        return Err(NumericsError::NoFreeVertices);
    }
    let available = 2.0 * m as f64 - dc.fixed_degree_sum() as f64;
    let floor = dc.free_floor_sum() as f64;
    if available < floor {
        return Err(NumericsError::Infeasible { available, floor });
    }
    let scale = available.max(1.0);
    let residual_at = |x: f64| dc.expected_free_degree(x) - available;
    if available == floor {
        return Ok(LambdaSolution { lambda: 0.0, residual: 0.0, iterations: 0 });
    }

    let mut lo = 0.0f64;
    let mut hi = 2.0 * available / free as f64 + dc.k() as f64 + 1.0;
    if residual_at(hi) < 0.0 {
        return Err(NumericsError::NoConvergence { lambda: hi, residual: residual_at(hi) });
    }
    let mut iterations = 0;
    while iterations < 2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        if residual_at(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (mut x, mut r) = [lo, hi]
        .into_iter()
        .map(|x| (x, residual_at(x)))
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("two candidates");
    for _ in 0..3 {
        let step = 1e-7 * x.max(1.0);
        let slope = (residual_at(x + step) - residual_at((x - step).max(0.0)))
            / (x + step - (x - step).max(0.0));
        if slope.is_nan() || slope <= 0.0 {
            break;
        }
        let cand = (x - r / slope).max(0.0);
        let rc = residual_at(cand);
        iterations += 1;
        if rc.abs() >= r.abs() {
            break;
        }
        (x, r) = (cand, rc);
    }
    if r.abs() > TOLERANCE * scale {
        return Err(NumericsError::NoConvergence { lambda: x, residual: r });
    }
    Ok(LambdaSolution { lambda: x, residual: r.abs(), iterations })
}
