//! Invariants over random small instances.

use kmatch::augment::{
    exhaustive_augment, find_k_factor, AlternatingTree, Adjacency, EdgeSupply, FactorConfig, FactorStatus, DEFAULT_TRAIL_BUDGET,
};
use kmatch::generate::{k_core_mask, sample_min_degree_graph};
use kmatch::io::{read_graph, write_graph};
use kmatch::oracle::{brute_force_max_k_matching, naive_k_core, verify_k_factor, verify_k_matching};
use kmatch::rng::stream;
use kmatch::tinf::{run, TinfConfig};
use kmatch::{KMatching, MultiGraph};
use proptest::prelude::*;

fn multigraph(max_n: usize, max_m: usize) -> impl Strategy<Value = MultiGraph> {
    (1..=max_n).prop_flat_map(move |n| {
        proptest::collection::vec((0..n, 0..n), 0..=max_m)
            .prop_map(move |pairs| MultiGraph::from_edge_list(n, &pairs).expect("ids in range"))
    })
}

fn checked_cfg() -> TinfConfig {
    TinfConfig { check_every: Some(1), trace: true, ..TinfConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn graph_degree_sum_tracks_deletions(g in multigraph(30, 80), picks in proptest::collection::vec(any::<u32>(), 0..40)) {
        let mut g = g;
        for p in picks {
            let live: Vec<_> = g.edges().map(|(e, _, _)| e).collect();
            if live.is_empty() {
                break;
            }
            g.delete_edge(live[p as usize % live.len()]).unwrap();
            prop_assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.m());
            prop_assert!(g.validate().is_ok());
        }
    }

    #[test]
    fn greedy_keeps_labels_buckets_and_ledger(g in multigraph(40, 120), k in 1usize..=4, seed in any::<u64>()) {
        let n = g.n();
        let original = g.clone();
        let out = run(g, k, &mut stream(seed, "p"), &checked_cfg()).unwrap();
        prop_assert!(out.stats.ledger_holds(n, k));
        prop_assert!(verify_k_matching(&original, &out.matching.pairs(), k).is_ok());
        prop_assert!(out.trace.records.iter().all(|r| r.p.len() == k + 1));
    }

    #[test]
    fn greedy_never_beats_the_optimum(g in multigraph(10, 16), k in 1usize..=3, seed in any::<u64>()) {
        let opt = brute_force_max_k_matching(&g, k).unwrap().optimum;
        let out = run(g, k, &mut stream(seed, "p"), &TinfConfig::default()).unwrap();
        prop_assert!(out.matching.size() <= opt);
    }

    #[test]
    fn exhaustive_reaches_the_optimum(g in multigraph(10, 16), k in 1usize..=3, seed in any::<u64>()) {
        let opt = brute_force_max_k_matching(&g, k).unwrap().optimum;
        let mut m = run(g.clone(), k, &mut stream(seed, "p"), &TinfConfig::default()).unwrap().matching;
        let r = exhaustive_augment(&Adjacency::from_graph(&g), &mut m, None, DEFAULT_TRAIL_BUDGET).unwrap();
        prop_assert!(r.complete);
        prop_assert_eq!(m.size(), opt);
        prop_assert!(verify_k_matching(&g, &m.pairs(), k).is_ok());
    }

    #[test]
    fn pipeline_output_is_valid_and_bounded(g in multigraph(10, 16), k in 1usize..=3, seed in any::<u64>()) {
        let opt = brute_force_max_k_matching(&g, k).unwrap().optimum;
        let out = find_k_factor(&g, &FactorConfig::new(k), seed).unwrap();
        let pairs = out.matching.pairs();
        prop_assert!(verify_k_matching(&g, &pairs, k).is_ok());
        prop_assert!(pairs.len() <= opt);
        match out.status {
            FactorStatus::Factor => prop_assert!(verify_k_factor(&g, &pairs, k, None).is_ok()),
            FactorStatus::FactorCritical { excluded } => prop_assert!(verify_k_factor(&g, &pairs, k, Some(excluded)).is_ok()),
            FactorStatus::BestEffort { deficit } => prop_assert!(deficit > 0),
        }
    }

    #[test]
    fn core_matches_naive_fixpoint(g in multigraph(40, 90), k in 1usize..=4) {
        let mask = k_core_mask(&g, k);
        let fast: Vec<usize> = (0..g.n()).filter(|&v| mask[v]).collect();
        prop_assert_eq!(fast, naive_k_core(&g, k));
    }

    #[test]
    fn graph_files_round_trip(g in multigraph(30, 60), k in 1usize..=5) {
        let mut buf = Vec::new();
        write_graph(&mut buf, &g, k).unwrap();
        let back = read_graph(buf.as_slice()).unwrap();
        prop_assert_eq!(back.k, k);
        prop_assert_eq!(back.graph.edge_list(), g.edge_list());
    }

    #[test]
    fn toggling_a_walk_twice_is_the_identity(g in multigraph(20, 50), k in 1usize..=3, seed in any::<u64>(), len in 1usize..8) {
        let m0 = run(g.clone(), k, &mut stream(seed, "p"), &TinfConfig::default()).unwrap().matching;
        // Random alternating walk: unmatched, matched, unmatched, ...
        let adj = Adjacency::from_graph(&g);
        let mut rng = stream(seed, "walk");
        let Some(start) = (0..g.n()).find(|&v| !adj.neighbors(v).is_empty()) else { return Ok(()) };
        let mut walk = vec![start];
        for step in 0..len {
            let x = *walk.last().unwrap();
            let options: Vec<usize> = if step % 2 == 0 {
                adj.neighbors(x).iter().map(|&y| y as usize).filter(|&y| !m0.contains(x, y)).collect()
            } else {
                m0.partners(x).iter().map(|&y| y as usize).collect()
            };
            let used = |a: usize, b: usize| walk.windows(2).any(|w| (w[0] == a && w[1] == b) || (w[0] == b && w[1] == a));
            let options: Vec<usize> = options.into_iter().filter(|&y| !used(x, y)).collect();
            if options.is_empty() {
                break;
            }
            walk.push(options[rand::Rng::gen_range(&mut rng, 0..options.len())]);
        }
        let mut m = m0.clone();
        // A walk that would overfill a vertex is rejected; nothing to undo.
        if m.toggle_walk(&walk).is_ok() {
            m.toggle_walk(&walk).unwrap();
            prop_assert_eq!(m.pairs(), m0.pairs());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trees_keep_edge_classes_and_augment(n in 40usize..200, k in 2usize..=3, seed in any::<u64>(), height in 1usize..5) {
        let g = sample_min_degree_graph(n, (k + 1) * n / 2 + n / 2, k, &mut stream(seed, "g")).unwrap();
        let adj = Adjacency::from_graph(&g);
        let m = run(g.clone(), k, &mut stream(seed, "t"), &TinfConfig::default()).unwrap().matching;
        let mut supply = EdgeSupply::new(n, k);
        supply.renew();
        let mut rng = stream(seed, "tree");
        for root in m.deficient_vertices().collect::<Vec<_>>() {
            let tree = AlternatingTree::grow(root, &m, height, &adj, &mut supply, &mut rng).unwrap();
            prop_assert!(tree.check(&m, &adj).is_ok(), "{:?}", tree.check(&m, &adj));
            if let Some(y) = tree.deficient_odd(&m) {
                let path = tree.path_to(y).unwrap();
                prop_assert_eq!(path.len() % 2, 0);
                let mut m2: KMatching = m.clone();
                m2.apply_augmenting_path(&path).unwrap();
                prop_assert_eq!(m2.size(), m.size() + 1);
                prop_assert!(verify_k_matching(&g, &m2.pairs(), k).is_ok());
            }
        }
    }
}
