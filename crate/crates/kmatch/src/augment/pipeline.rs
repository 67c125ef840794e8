//! The end-to-end k-factor search.

use super::pool::{augment_pool, AugmentStats};
use super::start::{pick_excluded_vertex, StartReport};
use super::{deficit, reserve_edges, run_tinf_with_priority, Adjacency, AugmentError, AugmentParams};
use crate::graph::MultiGraph;
use crate::matching::KMatching;
use crate::oracle::verify_k_matching;
use crate::rng::stream;
use crate::tinf::{TinfConfig, TinfStats, TinfTrace};
use rand::Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorStatus {
    /// Every vertex has degree `k`.
    Factor,
    /// Every vertex but `excluded` has degree `k`; `excluded` has degree 0.
    FactorCritical { excluded: usize },
    /// No augmenting trail is left, or the search budget ran out, with this
    /// total deficiency over the non-excluded vertices.
    BestEffort { deficit: usize },
}

#[derive(Clone, Debug)]
pub struct FactorConfig {
    pub k: usize,
    /// Reservation probability; `None` uses `n^(-0.15)`.
    pub p_reserve: Option<f64>,
    /// `None` uses [`AugmentParams::for_size`].
    pub params: Option<AugmentParams>,
    pub tinf: TinfConfig,
    /// Verify the matching after every stage, not only at the end.
    pub check_stages: bool,
    /// Random candidates for the excluded vertex before a full scan.
    pub z_tries: usize,
}

impl FactorConfig {
    #[must_use]
    pub fn new(k: usize) -> Self {
        Self { k, p_reserve: None, params: None, tinf: TinfConfig::default(), check_stages: true, z_tries: 64 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorOutcome {
    #[serde(skip)]
    pub matching: KMatching,
    pub status: FactorStatus,
    pub p_reserve: f64,
    pub sampled: usize,
    pub reserved: usize,
    pub v0: usize,
    pub tinf: TinfStats,
    /// Filled when `FactorConfig::tinf.trace` is set.
    #[serde(skip)]
    pub trace: TinfTrace,
    pub tinf_size: usize,
    pub tinf_deficit: usize,
    pub excluded: Option<usize>,
    pub start: Option<StartReport>,
    /// Candidates tried for the excluded vertex; 0 when `kn` is even.
    pub z_attempts: usize,
    /// `true` when no candidate passed the preprocessing and the excluded
    /// vertex was only stripped of its pairs.
    pub start_fallback: bool,
    pub augment: AugmentStats,
    pub reserve_left: usize,
}

impl FactorOutcome {
    #[must_use]
    pub fn is_factor(&self) -> bool {
        !matches!(self.status, FactorStatus::BestEffort { .. })
    }
}

fn check(g: &MultiGraph, m: &KMatching, stage: &'static str) -> Result<(), AugmentError> {
    verify_k_matching(g, &m.pairs(), m.k()).map_err(|v| AugmentError::Invariant { stage, detail: v.to_string() })
}

/// Reserve, greedy, preprocessing (odd `kn` only), augmentation. All random
/// choices come from streams of `seed`, so a `(graph, config, seed)` triple
/// always produces the same outcome.
pub fn find_k_factor(g: &MultiGraph, cfg: &FactorConfig, seed: u64) -> Result<FactorOutcome, AugmentError> {
    let (n, k) = (g.n(), cfg.k);
    if k == 0 {
        return Err(AugmentError::Params("k must be at least 1".into()));
    }
    let p = cfg.p_reserve.unwrap_or_else(|| (n.max(2) as f64).powf(-0.15));
    let params = cfg.params.clone().unwrap_or_else(|| AugmentParams::for_size(n, k));
    params.validate()?;

    let reserved = reserve_edges(g, k, p, &mut stream(seed, "reserve"))?;
    let greedy = run_tinf_with_priority(reserved.residual.clone(), &reserved.v0, k, &mut stream(seed, "tinf"), &cfg.tinf)?;
    let mut m = greedy.matching;
    if cfg.check_stages {
        check(g, &m, "greedy")?;
    }
    let tinf_size = m.size();
    let tinf_deficit = deficit(&m, None);

    let (mut excluded, mut start, mut z_attempts, mut start_fallback) = (None, None, 0, false);
    if (k * n) % 2 == 1 {
        let adj = Adjacency::from_graph(&reserved.residual);
        let mut rng = stream(seed, "start");
        match pick_excluded_vertex(&adj, &m, cfg.z_tries, &mut rng) {
            Ok((z, m2, rep, tries)) => {
                (excluded, start, z_attempts) = (Some(z), Some(rep), tries);
                m = m2;
            }
            Err(AugmentError::LocalStructure { .. }) => {
                let z = rng.gen_range(0..n);
                for u in m.partners(z).to_vec() {
                    m.remove(z, u as usize)?;
                }
                (excluded, z_attempts, start_fallback) = (Some(z), n + cfg.z_tries, true);
            }
            Err(e) => return Err(e),
        }
        if cfg.check_stages {
            check(g, &m, "preprocessing")?;
        }
    }

    let report = augment_pool(&reserved, m, excluded, &params, &mut stream(seed, "augment"))?;
    check(g, &report.matching, "augmentation")?;
    let m = report.matching;
    let status = match (report.perfect, excluded) {
        (true, None) => FactorStatus::Factor,
        (true, Some(z)) => FactorStatus::FactorCritical { excluded: z },
        (false, _) => FactorStatus::BestEffort { deficit: deficit(&m, excluded) },
    };
    Ok(FactorOutcome {
        matching: m,
        status,
        p_reserve: p,
        sampled: reserved.sampled,
        reserved: reserved.e_p.len(),
        v0: reserved.v0.len(),
        tinf: greedy.stats,
        trace: greedy.trace,
        tinf_size,
        tinf_deficit,
        excluded,
        start,
        z_attempts,
        start_fallback,
        augment: report.stats,
        reserve_left: report.reserve_left,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{sample_min_degree_graph, sample_simple_min_degree_graph};
    use crate::oracle::verify_k_factor;

    #[test]
    fn even_instance_gives_a_factor() {
        let g = sample_simple_min_degree_graph(2000, 4000, 2, 500, &mut stream(5, "g")).unwrap();
        let out = find_k_factor(&g, &FactorConfig::new(2), 5).unwrap();
        assert_eq!(out.status, FactorStatus::Factor);
        verify_k_factor(&g, &out.matching.pairs(), 2, None).unwrap();
    }

    #[test]
    fn odd_instance_gives_a_critical_factor() {
        let g = sample_simple_min_degree_graph(2001, 4500, 3, 5000, &mut stream(6, "g")).unwrap();
        let out = find_k_factor(&g, &FactorConfig::new(3), 6).unwrap();
        let FactorStatus::FactorCritical { excluded } = out.status else { panic!("status {:?}", out.status) };
        verify_k_factor(&g, &out.matching.pairs(), 3, Some(excluded)).unwrap();
    }

    #[test]
    fn same_seed_same_outcome() {
        let g = sample_min_degree_graph(500, 1000, 2, &mut stream(7, "g")).unwrap();
        let a = find_k_factor(&g, &FactorConfig::new(2), 7).unwrap();
        let b = find_k_factor(&g, &FactorConfig::new(2), 7).unwrap();
        assert_eq!(a.matching, b.matching);
        assert_eq!(a.augment, b.augment);
    }

    #[test]
    fn impossible_instance_is_best_effort() {
        let g = MultiGraph::from_edge_list(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let out = find_k_factor(&g, &FactorConfig::new(2), 1).unwrap();
        assert!(matches!(out.status, FactorStatus::BestEffort { deficit } if deficit > 0));
    }
}
