use proptest::prelude::*;

use trifactor::cover::{solve, SolveOutcome};
use trifactor::exact::has_factor;
use trifactor::graph::{verify_cover, Config, TripartiteGraph};
use trifactor::harness::io::{parse_tri3, write_tri3};

fn graph(max_n: usize) -> impl Strategy<Value = TripartiteGraph> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), 3 * n * n).prop_map(move |bits| {
            TripartiteGraph::from_fn(n, |u, v| {
                let (u, v) = if u.class < v.class { (u, v) } else { (v, u) };
                let pair = u.class + v.class - 1;
                bits[pair * n * n + u.index * n + v.index]
            })
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tri3_roundtrip(g in graph(6)) {
        let text = write_tri3(&g);
        let h = parse_tri3(&text).unwrap();
        prop_assert_eq!(&h, &g);
        prop_assert_eq!(write_tri3(&h), text);
    }

    #[test]
    fn solve_matches_oracle(g in graph(5)) {
        let truth = has_factor(&g, 10_000_000).unwrap();
        match solve(&g, &Config::default()) {
            SolveOutcome::Cover(c) => {
                prop_assert!(truth);
                prop_assert!(verify_cover(&g, c.triangles(), true).is_accept());
            }
            SolveOutcome::NoFactor { .. } => prop_assert!(!truth),
            other => prop_assert!(false, "undecided: {:?}", other),
        }
    }

    #[test]
    fn dense_graphs_solve(seed in any::<u64>(), n in 3usize..10) {
        let g = trifactor::families::gen_random_min_degree(n, 0.8, seed).unwrap();
        prop_assert!(matches!(solve(&g, &Config::default()), SolveOutcome::Cover(_)));
    }
}
