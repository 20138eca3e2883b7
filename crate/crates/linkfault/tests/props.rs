mod common;

use common::dijkstra_hops;
use linkfault::dataset::quantize_feature;
use linkfault::flowsim::{
    link_loads, ordered_pairs, pair_index, shortest_paths, DemandMatrix,
};
use linkfault::learners::mlp::Head;
use linkfault::metrics::{f1_from, precision_recall_f1, ConfusionMatrix};
use linkfault::pipeline::relative_rmse;
use linkfault::rng::{derive_seed, rng_from_seed, standard_normal};
use linkfault::topology::small_world::{generate_small_world, LinkProps};
use linkfault::topology::{FaultScenario, LinkRef, ScenarioKind, Topology};
use proptest::prelude::*;

/// Keeps each property affordable on one core.
fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

prop_compose! {
    fn arbitrary_topology()(
        n in 6usize..16,
        k in prop_oneof![Just(2usize), Just(4usize)],
        p in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) -> Topology {
        generate_small_world(n, k, p, seed, &LinkProps::default()).unwrap()
    }
}

proptest! {
    #![proptest_config(cases(24))]

    /// Every unit of demand crosses exactly `hops` links, so the total
    /// carried load equals the demand-weighted hop count.
    #[test]
    fn load_is_conserved(topology in arbitrary_topology(), demand_seed in any::<u64>()) {
        let v = topology.node_count();
        let demands = DemandMatrix::uniform_random(v, 1.0, 200.0, demand_seed);
        let paths = shortest_paths(&topology);
        let loads = link_loads(&topology, &paths, &demands);
        let total: f64 = loads.iter().sum();
        let expected: f64 = ordered_pairs(v)
            .map(|(s, d)| demands.rate(s, d) * paths.hop_count(s, d) as f64)
            .sum();
        prop_assert!((total - expected).abs() <= 1e-6 * expected.max(1.0));
    }

    /// Hop counts from the path table match an independent Dijkstra.
    #[test]
    fn hop_counts_match_dijkstra(topology in arbitrary_topology()) {
        let v = topology.node_count();
        let paths = shortest_paths(&topology);
        for s in 0..v {
            let oracle = dijkstra_hops(&topology, s);
            for d in 0..v {
                if s != d {
                    prop_assert_eq!(paths.hop_count(s, d), oracle[d]);
                }
            }
        }
    }

    /// Removing a link never shortens any path.
    #[test]
    fn link_removal_never_shortens_paths(topology in arbitrary_topology()) {
        let v = topology.node_count();
        let before = shortest_paths(&topology);
        for idx in topology.removable_links() {
            let removed = topology.link(idx).ends;
            let faulted = topology
                .apply_fault(&FaultScenario::Disconnection { removed })
                .unwrap();
            let after = shortest_paths(&faulted);
            for (s, d) in ordered_pairs(v) {
                prop_assert!(after.hop_count(s, d) >= before.hop_count(s, d));
            }
        }
    }

    /// A reconnection whose added link keeps the moved node as its low
    /// endpoint has a valid inverse reconnection, and applying both
    /// restores the original edge list exactly (properties ride along
    /// through the swap). Other reconnections have no valid inverse because
    /// the added link must share the removed link's low endpoint.
    #[test]
    fn reconnection_and_inverse_restore_the_edge_list(topology in arbitrary_topology()) {
        let scenarios = linkfault::topology::enumerate_scenarios(
            &topology,
            &[ScenarioKind::Reconnection],
            0,
        );
        for scenario in scenarios.iter().take(10) {
            let FaultScenario::Reconnection { removed, added } = scenario else {
                unreachable!("only reconnections were requested");
            };
            let forward = topology.apply_fault(scenario).unwrap();
            let inverse = FaultScenario::Reconnection { removed: *added, added: *removed };
            let back = forward.apply_fault(&inverse);
            if removed.a == added.a {
                prop_assert_eq!(back.unwrap().to_edge_list(), topology.to_edge_list());
            } else {
                prop_assert!(back.is_err(), "inverse must fail the endpoint-sharing rule");
            }
        }
    }

    /// Every scenario the enumerator proposes applies cleanly and keeps the
    /// network connected.
    #[test]
    fn enumerated_scenarios_apply_cleanly(topology in arbitrary_topology()) {
        let scenarios = linkfault::topology::enumerate_scenarios(
            &topology,
            &[ScenarioKind::NoFault, ScenarioKind::Disconnection, ScenarioKind::Reconnection],
            0,
        );
        for scenario in &scenarios {
            let faulted = topology.apply_fault(scenario);
            prop_assert!(faulted.is_ok(), "{scenario:?}: {faulted:?}");
        }
    }
}

proptest! {
    #![proptest_config(cases(64))]

    /// `pair_index` bijects ordered pairs onto `0..v*(v-1)`.
    #[test]
    fn pair_index_is_a_bijection(v in 2usize..12) {
        let mut seen = vec![false; v * (v - 1)];
        for (s, d) in ordered_pairs(v) {
            let idx = pair_index(v, s, d);
            prop_assert!(!seen[idx], "duplicate index {idx}");
            seen[idx] = true;
        }
        prop_assert!(seen.iter().all(|&s| s));
    }

    /// Link references ignore endpoint order.
    #[test]
    fn link_ref_is_order_insensitive(a in 0usize..50, b in 0usize..50) {
        prop_assume!(a != b);
        let forward = LinkRef::new(a, b);
        let backward = LinkRef::new(b, a);
        prop_assert_eq!(forward, backward);
        prop_assert!(forward.a < forward.b);
    }

    /// Quantization is idempotent: a quantized value re-quantizes to itself,
    /// which is what makes CSV round-trips bitwise stable.
    #[test]
    fn quantization_is_idempotent(x in -1e12f64..1e12) {
        let q = quantize_feature(x);
        prop_assert_eq!(quantize_feature(q).to_bits(), q.to_bits());
    }

    /// Relative RMSE is invariant under a common positive rescaling.
    #[test]
    fn relative_rmse_scale_invariance(
        values in prop::collection::vec(-100.0f64..100.0, 2..10),
        offsets in prop::collection::vec(-10.0f64..10.0, 2..10),
        scale in 0.001f64..1000.0,
    ) {
        let n = values.len().min(offsets.len());
        let actual = &values[..n];
        let predicted: Vec<f64> =
            actual.iter().zip(&offsets[..n]).map(|(v, o)| v + o).collect();
        prop_assume!(actual.iter().any(|&v| v != 0.0));
        let base = relative_rmse(&predicted, actual);
        let scaled = relative_rmse(
            &predicted.iter().map(|v| v * scale).collect::<Vec<_>>(),
            &actual.iter().map(|v| v * scale).collect::<Vec<_>>(),
        );
        prop_assert!((scaled - base).abs() <= 1e-9 * base.max(1.0));
    }

    /// F1 lies between 0 and the arithmetic mean of precision and recall.
    #[test]
    fn f1_bounds(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
        let f1 = f1_from(p, r);
        prop_assert!((0.0..=1.0).contains(&f1));
        prop_assert!(f1 <= (p + r) / 2.0 + 1e-12);
        prop_assert!(f1 <= 2.0 * p.min(r) + 1e-12);
    }

    /// Scores do not depend on the order samples were recorded in.
    #[test]
    fn confusion_scores_are_order_free(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60),
        swap_seed in any::<u64>(),
    ) {
        let forward = ConfusionMatrix::from_pairs(4, pairs.iter().copied());
        let mut shuffled = pairs.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut rng_from_seed(swap_seed));
        let scrambled = ConfusionMatrix::from_pairs(4, shuffled);
        prop_assert_eq!(precision_recall_f1(&forward), precision_recall_f1(&scrambled));
    }

    /// Softmax outputs are probability rows for any weights.
    #[test]
    fn softmax_rows_always_normalize(seed in any::<u64>(), rows in 1usize..6) {
        let sizes = [3usize, 5, 4];
        let mut rng = rng_from_seed(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in sizes.windows(2) {
            let mut m = linkfault::linalg::Matrix::zeros(pair[0], pair[1]);
            for v in &mut m.data {
                *v = 2.0 * standard_normal(&mut rng);
            }
            weights.push(m);
            biases.push((0..pair[1]).map(|_| standard_normal(&mut rng)).collect());
        }
        let model = linkfault::learners::mlp::MlpModel {
            layer_sizes: sizes.to_vec(),
            weights,
            biases,
            head: Head::Softmax,
            input_means: vec![0.0; 3],
            input_stds: vec![1.0; 3],
            target_means: vec![],
            target_stds: vec![],
        };
        let mut x = linkfault::linalg::Matrix::zeros(rows, 3);
        for v in &mut x.data {
            *v = 3.0 * standard_normal(&mut rng);
        }
        let probs = model.forward(&x).unwrap();
        for i in 0..rows {
            let sum: f64 = probs.row(i).iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(probs.row(i).iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    /// Derived seeds differ across streams (collisions would couple the
    /// noise of different dataset rows).
    #[test]
    fn derived_streams_differ(base in any::<u64>(), s1 in 0u64..1000, s2 in 0u64..1000) {
        prop_assume!(s1 != s2);
        prop_assert_ne!(derive_seed(base, s1), derive_seed(base, s2));
    }
}
