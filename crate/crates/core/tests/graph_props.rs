use proptest::prelude::*;
use skysheaf::graphs::{compare_graphs, double_cover, parse_graph, wl_equals_unfolding, wl_refine, Graph};

fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n)
        .prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            let m = pairs.len();
            (Just(n), Just(pairs), prop::collection::vec(any::<bool>(), m))
        })
        .prop_map(|(n, pairs, keep)| {
            let edges: Vec<(usize, usize)> = pairs
                .into_iter()
                .zip(keep)
                .filter(|(_, k)| *k)
                .map(|(e, _)| e)
                .collect();
            Graph::new(n, &edges, None).unwrap()
        })
}

fn refines(fine: &[usize], coarse: &[usize]) -> bool {
    (0..fine.len()).all(|a| (0..fine.len()).all(|b| fine[a] != fine[b] || coarse[a] == coarse[b]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partitions_only_refine(g in graph(9)) {
        let wl = wl_refine(&g, 6);
        for r in 1..=6 {
            prop_assert!(refines(&wl.partition(r), &wl.partition(r - 1)));
        }
    }

    #[test]
    fn comparison_ignores_relabeling(g in graph(7), h in graph(7), k in 0usize..=4, shift in 0usize..7) {
        let perm: Vec<usize> = (0..g.n_nodes()).map(|i| (i + shift) % g.n_nodes()).collect();
        let moved = g.relabel(&perm).unwrap();
        prop_assert!(!compare_graphs(&g, &moved, k).distinguishable);
        prop_assert_eq!(compare_graphs(&g, &h, k).distinguishable, compare_graphs(&moved, &h, k).distinguishable);
    }

    #[test]
    fn double_cover_counts(g in graph(8)) {
        let dc = double_cover(&g);
        prop_assert_eq!(dc.edge_arcs(), 2 * g.edges().len());
        prop_assert_eq!(dc.loop_lifts(), g.n_nodes());
        prop_assert_eq!(dc.arcs.len(), dc.edge_arcs() + dc.loop_lifts());
    }

    #[test]
    fn wl_matches_unfolding_on_larger_graphs(g in graph(9), k in 0usize..=4) {
        prop_assert!(wl_equals_unfolding(&g, k));
    }
}

#[test]
fn edge_list_and_json_agree() {
    let a = parse_graph("# square\n1 2\n2 3\n3 4\n4 1\n").unwrap();
    let b = parse_graph(r#"{"n_nodes": 4, "edges": [[1,2],[2,3],[3,4],[4,1]]}"#).unwrap();
    assert!(!compare_graphs(&a, &b, 4).distinguishable);
    assert!(parse_graph("1 1\n").is_err());
    assert!(parse_graph("1 2\n2 1\n").is_err());
}

#[test]
fn labels_separate_otherwise_equal_graphs() {
    let plain = Graph::cycle(4);
    let marked = Graph::new(4, plain.edges(), Some(vec![0, 0, 0, 1])).unwrap();
    assert!(compare_graphs(&plain, &marked, 0).distinguishable);
}
