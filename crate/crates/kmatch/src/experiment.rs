//! Seed sweeps of the factor pipeline.

use crate::augment::{find_k_factor, AugmentError, FactorConfig, FactorStatus};
use crate::generate::{process_until_core, sample_min_degree_graph, sample_simple_min_degree_graph, GenerateError};
use crate::graph::MultiGraph;
use crate::oracle::verify_k_factor;
use crate::par::Exec;
use crate::rng::stream;
use serde::Serialize;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("seed {seed}: {source}")]
    Generate { seed: u64, source: GenerateError },
    #[error("seed {seed}: {source}")]
    Pipeline { seed: u64, source: AugmentError },
    #[error("seed {seed}: the core of order k + 1 = {} is empty at the hitting time", k + 1)]
    EmptyCore { seed: u64, k: usize },
}

impl ExperimentError {
    #[must_use]
    pub fn seed(&self) -> u64 {
        match self {
            Self::Generate { seed, .. } | Self::Pipeline { seed, .. } | Self::EmptyCore { seed, .. } => *seed,
        }
    }
}

/// Where each seed's graph comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    /// `m` edges, minimum degree `k + 1`; `simple` redraws until there are
    /// no loops or repeated pairs, up to `attempts` times.
    MinDegree { n: usize, m: usize, simple: bool, attempts: usize },
    /// The `(k + 1)`-core of the random graph process on `n` vertices at the
    /// step it first appears.
    Process { n: usize },
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub source: Source,
    pub seeds: Vec<u64>,
    pub factor: FactorConfig,
}

/// One seed of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedRow {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// Hitting time of the process source.
    pub sigma: Option<usize>,
    pub size: usize,
    /// `floor(kn/2) - |M|`.
    pub deficit: usize,
    pub status: &'static str,
    pub excluded: Option<usize>,
    /// The output passed the independent factor check.
    pub factor: bool,
    pub tinf_deficit: usize,
    pub iterations: usize,
    pub fallback_steps: usize,
    pub fallback_rate: f64,
    pub wall_ms: f64,
}

/// Minimum, median and maximum of a column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Quantiles {
    #[must_use]
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let mid = v.len() / 2;
        let median = if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 };
        Some(Self { min: v[0], median, max: v[v.len() - 1] })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub runs: usize,
    pub factors: usize,
    pub deficit: Option<Quantiles>,
    pub wall_ms: Option<Quantiles>,
    /// Exhaustive steps over augmentation iterations, pooled over runs.
    pub fallback_rate: f64,
}

impl RunSummary {
    #[must_use]
    pub fn of(rows: &[SeedRow]) -> Self {
        let iterations: usize = rows.iter().map(|r| r.iterations).sum();
        let fallbacks: usize = rows.iter().map(|r| r.fallback_steps).sum();
        Self {
            runs: rows.len(),
            factors: rows.iter().filter(|r| r.factor).count(),
            deficit: Quantiles::of(rows.iter().map(|r| r.deficit as f64)),
            wall_ms: Quantiles::of(rows.iter().map(|r| r.wall_ms)),
            fallback_rate: if iterations == 0 { 0.0 } else { fallbacks as f64 / iterations as f64 },
        }
    }
}

/// The graph for `seed`, and the hitting time when the source is the process.
pub fn sample_graph(source: Source, k: usize, seed: u64) -> Result<(MultiGraph, Option<usize>), ExperimentError> {
    let mut rng = stream(seed, "graph");
    let wrap = |source| ExperimentError::Generate { seed, source };
    match source {
        Source::MinDegree { n, m, simple: false, .. } => Ok((sample_min_degree_graph(n, m, k, &mut rng).map_err(wrap)?, None)),
        Source::MinDegree { n, m, simple: true, attempts } => {
            Ok((sample_simple_min_degree_graph(n, m, k, attempts, &mut rng).map_err(wrap)?, None))
        }
        Source::Process { n } => {
            let p = process_until_core(n, k, &mut rng).map_err(wrap)?;
            if p.core.is_empty() {
                return Err(ExperimentError::EmptyCore { seed, k });
            }
            Ok((p.core.graph, Some(p.sigma)))
        }
    }
}

/// Samples and solves one seed.
pub fn run_seed(cfg: &SweepConfig, seed: u64) -> Result<SeedRow, ExperimentError> {
    let k = cfg.factor.k;
    let (g, sigma) = sample_graph(cfg.source, k, seed)?;
    let start = Instant::now();
    let out = find_k_factor(&g, &cfg.factor, seed).map_err(|source| ExperimentError::Pipeline { seed, source })?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let pairs = out.matching.pairs();
    let (status, excluded) = match out.status {
        FactorStatus::Factor => ("factor", None),
        FactorStatus::FactorCritical { excluded } => ("factor_critical", Some(excluded)),
        FactorStatus::BestEffort { .. } => ("best_effort", out.excluded),
    };
    let factor = out.is_factor() && verify_k_factor(&g, &pairs, k, excluded).is_ok();
    Ok(SeedRow {
        seed,
        n: g.n(),
        m: g.m(),
        k,
        sigma,
        size: pairs.len(),
        deficit: (k * g.n() / 2).saturating_sub(pairs.len()),
        status,
        excluded,
        factor,
        tinf_deficit: out.tinf_deficit,
        iterations: out.augment.iterations,
        fallback_steps: out.augment.fallback_steps,
        fallback_rate: out.augment.fallback_rate(),
        wall_ms,
    })
}

/// Runs every seed under `exec`; rows come back in seed order.
pub fn run_sweep(cfg: &SweepConfig, exec: Exec) -> Result<Vec<SeedRow>, ExperimentError> {
    exec.map(&cfg.seeds, |&seed| run_seed(cfg, seed)).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_of_even_and_odd_samples() {
        assert_eq!(Quantiles::of([3.0, 1.0, 2.0]), Some(Quantiles { min: 1.0, median: 2.0, max: 3.0 }));
        assert_eq!(Quantiles::of([4.0, 1.0, 2.0, 3.0]).unwrap().median, 2.5);
        assert_eq!(Quantiles::of(std::iter::empty()), None);
    }

    #[test]
    fn sweep_rows_follow_seed_order_in_both_modes() {
        let cfg = SweepConfig {
            source: Source::MinDegree { n: 400, m: 800, simple: false, attempts: 1 },
            seeds: vec![3, 1, 2],
            factor: FactorConfig::new(2),
        };
        let seq = run_sweep(&cfg, Exec::Sequential).unwrap();
        let par = run_sweep(&cfg, Exec::Parallel).unwrap();
        assert_eq!(seq.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![3, 1, 2]);
        for (a, b) in seq.iter().zip(&par) {
            assert_eq!((a.size, a.status, a.excluded), (b.size, b.status, b.excluded));
        }
        let s = RunSummary::of(&seq);
        assert_eq!(s.runs, 3);
    }

    #[test]
    fn process_source_reports_the_hitting_time() {
        let cfg = SweepConfig { source: Source::Process { n: 300 }, seeds: vec![5], factor: FactorConfig::new(2) };
        let row = run_seed(&cfg, 5).unwrap();
        assert!(row.sigma.is_some());
        assert!(row.n > 0 && row.n <= 300);
    }
}
