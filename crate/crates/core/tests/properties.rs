use std::collections::HashSet;

use hypergiant::branching::{survival_probability, OffspringLaw, DEFAULT_TOL};
use hypergiant::combinatorics::{binomial_u64, rank_subset, unrank_subset, Params, Universe};
use hypergiant::components::census;
use hypergiant::exploration::{bfs_component, bfs_tree, StopConfig, EXPLORED, NEUTRAL};
use hypergiant::sampling::{make_oracle, sample_edge_set, OracleMode};
use hypergiant::smoothness::degree_counts;
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = (u32, u32, u32)> {
    (2u32..=5).prop_flat_map(|k| (Just(k), 1..k)).prop_flat_map(|(k, j)| (k + 1..=18u32, Just(k), Just(j)))
}

fn instance() -> impl Strategy<Value = (Params, u64)> {
    (shape(), -0.5f64..1.5, any::<u64>())
        .prop_map(|((n, k, j), eps, seed)| (Params::from_eps(n, k, j, eps).unwrap(), seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rank_round_trip(set in proptest::collection::btree_set(0u32..60, 1..7)) {
        let v: Vec<u32> = set.into_iter().collect();
        let r = rank_subset(&v).unwrap();
        prop_assert!(r.rank < binomial_u64(60, v.len() as u64).unwrap());
        prop_assert_eq!(unrank_subset(r, 60).unwrap(), v.clone());
        let u = Universe::new(60, v.len() as u32 + 1, v.len() as u32).unwrap();
        prop_assert_eq!(u.rank(&v), r.rank);
        prop_assert_eq!(u.unrank(r.rank, v.len() as u32), v);
    }

    #[test]
    fn generations_are_disjoint_and_explored((params, seed) in instance(), root_pick in any::<u64>()) {
        let u = Universe::from_params(&params).unwrap();
        let root = root_pick % u.num_jsets;
        let mut oracle = make_oracle(&params, seed, OracleMode::Lazy, None).unwrap();
        let s = bfs_component(&u, root, &mut oracle, &StopConfig::unbounded()).unwrap();
        let mut seen = HashSet::new();
        for g in &s.generations {
            prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
            for &r in g {
                prop_assert!(seen.insert(r));
                prop_assert_eq!(s.status(r), EXPLORED);
            }
        }
        prop_assert_eq!(seen.len() as u64, s.size());
        for r in 0..u.num_jsets {
            if !seen.contains(&r) {
                prop_assert_eq!(s.status(r), NEUTRAL);
            }
        }
    }

    #[test]
    fn tree_search_is_a_hypertree((params, seed) in instance(), root_pick in any::<u64>()) {
        let u = Universe::from_params(&params).unwrap();
        let mut oracle = make_oracle(&params, seed, OracleMode::Lazy, None).unwrap();
        let s = bfs_tree(&u, root_pick % u.num_jsets, &mut oracle, &StopConfig::unbounded()).unwrap();
        prop_assert_eq!(s.size(), u.cconst() * s.edges.len() as u64 + 1);
    }

    #[test]
    fn degree_sums((params, seed) in instance()) {
        let u = Universe::from_params(&params).unwrap();
        let mut oracle = make_oracle(&params, seed, OracleMode::Lazy, None).unwrap();
        let s = bfs_component(&u, 0, &mut oracle, &StopConfig::unbounded()).unwrap();
        for g in &s.generations {
            for ell in 0..u.j {
                let d = degree_counts(&u, g, ell).unwrap();
                prop_assert_eq!(d.iter().sum::<u64>(), u.binom(u.j, ell) * g.len() as u64);
            }
        }
    }

    #[test]
    fn census_partitions_all_jsets((params, seed) in instance()) {
        let u = Universe::from_params(&params).unwrap();
        let es = sample_edge_set(&params, seed).unwrap();
        let c = census(&u, &es).unwrap();
        prop_assert_eq!(c.components.iter().map(|x| x.size).sum::<u64>(), u.num_jsets);
        prop_assert_eq!(c.components.iter().map(|x| x.edges).sum::<u64>(), es.len() as u64);
        prop_assert!(c.components.windows(2).all(|w| w[0].size >= w[1].size));
        for x in &c.components {
            prop_assert!(x.size <= u.cconst() * x.edges + 1);
            prop_assert_eq!(x.is_tree, x.size == u.cconst() * x.edges + 1);
        }
    }

    #[test]
    fn survival_root_solves_extinction(litter in 1u64..8, trials in 1u64..500, mean in 1.01f64..3.0) {
        let prob = (mean / (litter * trials) as f64).min(1.0);
        let law = OffspringLaw::new(litter, trials, prob).unwrap();
        let rho = survival_probability(&law, DEFAULT_TOL).unwrap();
        prop_assert!(rho > 0.0 && rho <= 1.0);
        let rho0 = 1.0 - (1.0 - rho).powi(litter as i32);
        let residual = (1.0 - prob * rho0).powf((litter * trials) as f64) - (1.0 - rho0);
        prop_assert!(residual.abs() < 1e-9, "residual {residual}");
    }
}
