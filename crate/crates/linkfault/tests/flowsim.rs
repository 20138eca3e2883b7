mod common;

use common::{desk, dijkstra_hops, path3, topo_from_pairs, triangle};
use linkfault::flowsim::{
    apply_noise, link_delay_us, link_loads, measure, measure_noiseless, ordered_pairs, pair_delays,
    pair_index, pair_losses, shortest_paths, simulate_probe_sweep, DemandMatrix, FeatureVector,
    SimConfig,
};
use linkfault::topology::small_world::{generate_small_world, LinkProps};
use linkfault::topology::{FaultScenario, Link, LinkRef, Topology};

fn no_noise() -> SimConfig {
    SimConfig { noise_std_fraction: 0.0, ..SimConfig::default() }
}

// --- pair ordering ---

#[test]
fn pair_index_matches_enumeration_order() {
    for v in [2, 3, 5, 10] {
        for (i, (s, d)) in ordered_pairs(v).enumerate() {
            assert_eq!(pair_index(v, s, d), i);
        }
        assert_eq!(ordered_pairs(v).count(), v * (v - 1));
    }
}

// --- shortest paths ---

#[test]
fn triangle_pairs_use_direct_links() {
    let paths = shortest_paths(&triangle());
    assert_eq!(paths.path(0, 2), &[0, 2]);
    assert_eq!(paths.path(2, 0), &[2, 0]);
}

#[test]
fn path_graph_routes_through_middle() {
    let paths = shortest_paths(&path3());
    assert_eq!(paths.path(0, 2), &[0, 1, 2]);
}

#[test]
fn equal_hop_tie_breaks_to_smallest_sequence() {
    // Square: 0-1-3 and 0-2-3 both have 2 hops; 0-1-3 is smaller.
    let square = topo_from_pairs(4, &[(0, 1), (1, 3), (0, 2), (2, 3)]);
    let paths = shortest_paths(&square);
    assert_eq!(paths.path(0, 3), &[0, 1, 3]);
    assert_eq!(paths.path(3, 0), &[3, 1, 0]);
}

#[test]
fn hop_counts_match_dijkstra_oracle_on_fixtures_and_random_graphs() {
    let mut topologies = vec![triangle(), path3(), desk()];
    for seed in 0..4u64 {
        topologies
            .push(generate_small_world(30, 4, 0.35, seed, &LinkProps::default()).unwrap());
    }
    for t in &topologies {
        let paths = shortest_paths(t);
        for s in 0..t.node_count() {
            let oracle = dijkstra_hops(t, s);
            for d in 0..t.node_count() {
                if s == d {
                    continue;
                }
                assert_eq!(
                    paths.hop_count(s, d),
                    oracle[d],
                    "pair ({s},{d}) disagrees with Dijkstra"
                );
            }
        }
    }
}

#[test]
fn paths_are_simple_and_use_existing_links() {
    let t = desk();
    let paths = shortest_paths(&t);
    for (s, d) in ordered_pairs(t.node_count()) {
        let p = paths.path(s, d);
        assert_eq!(p.first(), Some(&s));
        assert_eq!(p.last(), Some(&d));
        let mut seen = std::collections::HashSet::new();
        for &n in p {
            assert!(seen.insert(n), "node {n} repeats on path {p:?}");
        }
        for hop in p.windows(2) {
            assert!(t.link_index(LinkRef::new(hop[0], hop[1])).is_some());
        }
    }
}

#[test]
fn removing_a_link_never_shortens_paths() {
    let t = desk();
    let before = shortest_paths(&t);
    for idx in t.removable_links() {
        let removed = t.link(idx).ends;
        let faulted = t.apply_fault(&FaultScenario::Disconnection { removed }).unwrap();
        let after = shortest_paths(&faulted);
        for (s, d) in ordered_pairs(t.node_count()) {
            assert!(
                after.hop_count(s, d) >= before.hop_count(s, d),
                "removing {removed} shortened ({s},{d})"
            );
        }
    }
}

// --- demands and loads ---

#[test]
fn demand_matrix_validates_and_samples_in_range() {
    let m = DemandMatrix::uniform_random(10, 1.0, 300.0, 7);
    for (s, d) in ordered_pairs(10) {
        let r = m.rate(s, d);
        assert!((1.0..300.0).contains(&r), "rate {r}");
    }
    for n in 0..10 {
        assert_eq!(m.rate(n, n), 0.0, "diagonal stays zero");
    }
    let again = DemandMatrix::uniform_random(10, 1.0, 300.0, 7);
    assert_eq!(m, again);
}

#[test]
fn single_demand_loads_every_link_on_its_path() {
    let t = path3();
    let mut demands = DemandMatrix::zeros(3);
    demands.set_rate(0, 2, 100.0);
    let loads = link_loads(&t, &shortest_paths(&t), &demands);
    assert_eq!(loads, vec![100.0, 100.0]);
}

#[test]
fn shared_link_sums_demands() {
    let t = path3();
    let mut demands = DemandMatrix::zeros(3);
    demands.set_rate(0, 2, 100.0);
    demands.set_rate(1, 2, 100.0);
    let loads = link_loads(&t, &shortest_paths(&t), &demands);
    let idx12 = t.link_index(LinkRef::new(1, 2)).unwrap();
    let idx01 = t.link_index(LinkRef::new(0, 1)).unwrap();
    assert_eq!(loads[idx12], 200.0);
    assert_eq!(loads[idx01], 100.0);
}

#[test]
fn triangle_loads_match_exhaustive_oracle() {
    let t = triangle();
    let demands = DemandMatrix::uniform_random(3, 1.0, 300.0, 3);
    let paths = shortest_paths(&t);
    let loads = link_loads(&t, &paths, &demands);
    // Brute force: walk every pair's path by hand.
    let mut oracle = vec![0.0; t.link_count()];
    for (s, d) in ordered_pairs(3) {
        for hop in paths.path(s, d).windows(2) {
            oracle[t.link_index(LinkRef::new(hop[0], hop[1])).unwrap()] += demands.rate(s, d);
        }
    }
    assert_eq!(loads, oracle);
}

#[test]
fn load_conservation_sums_rate_times_hops() {
    let t = desk();
    let demands = DemandMatrix::uniform_random(10, 1.0, 300.0, 11);
    let paths = shortest_paths(&t);
    let loads = link_loads(&t, &paths, &demands);
    let lhs: f64 = loads.iter().sum();
    let rhs: f64 = ordered_pairs(10)
        .map(|(s, d)| demands.rate(s, d) * paths.hop_count(s, d) as f64)
        .sum();
    assert!((lhs - rhs).abs() < 1e-6 * rhs.max(1.0), "{lhs} vs {rhs}");
}

// --- delays ---

#[test]
fn zero_load_delay_is_twice_path_base_delay() {
    let t = path3();
    let config = no_noise();
    let paths = shortest_paths(&t);
    let loads = vec![0.0; t.link_count()];
    let delays = pair_delays(&t, &paths, &loads, &config);
    // Two hops of (prop + queueing base), both directions.
    let per_link = 50.0 / 2.0e8 * 1e6 + config.queueing_base_delay_us;
    let expected = 2.0 * 2.0 * per_link;
    let got = delays[pair_index(3, 0, 2)];
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
}

#[test]
fn delay_grows_with_utilization_and_stays_finite_past_cap() {
    let link = Link { ends: LinkRef::new(0, 1), capacity_mbps: 100.0, length_m: 50.0 };
    let config = no_noise();
    let d0 = link_delay_us(&link, 0.0, &config);
    let d50 = link_delay_us(&link, 50.0, &config);
    let d94 = link_delay_us(&link, 94.0, &config);
    assert!(d0 < d50 && d50 < d94);
    let d_at_cap = link_delay_us(&link, 95.0, &config);
    let d_overload = link_delay_us(&link, 1e9, &config);
    assert_eq!(d_at_cap, d_overload, "utilization capped at {}", config.max_utilization_cap);
    assert!(d_overload.is_finite());
    let expected_cap = link.prop_delay_us() + config.queueing_base_delay_us / (1.0 - 0.95);
    assert!((d_at_cap - expected_cap).abs() < 1e-12);
}

#[test]
fn rerouted_pairs_see_longer_delays_after_disconnection() {
    let t = desk();
    let demands = DemandMatrix::uniform_random(10, 1.0, 100.0, 5);
    let config = no_noise();
    let healthy = measure_noiseless(&t, &demands, &FaultScenario::NoFault, &config).unwrap();
    let removed = LinkRef::new(1, 2);
    let faulted =
        measure_noiseless(&t, &demands, &FaultScenario::Disconnection { removed }, &config)
            .unwrap();
    for d in [3, 4] {
        let idx = pair_index(10, 1, d);
        assert!(
            faulted.delays()[idx] > healthy.delays()[idx],
            "pair (1,{d}) should slow down when ({removed}) goes away"
        );
    }
}

// --- losses ---

#[test]
fn no_overload_no_fault_means_zero_loss() {
    let t = desk();
    let demands = DemandMatrix::uniform_random(10, 1.0, 10.0, 5);
    let config = no_noise();
    let v = measure_noiseless(&t, &demands, &FaultScenario::NoFault, &config).unwrap();
    assert!(v.losses().iter().all(|&l| l == 0.0));
}

#[test]
fn double_capacity_load_loses_half() {
    let t = topo_from_pairs(2, &[(0, 1)]);
    let mut demands = DemandMatrix::zeros(2);
    demands.set_rate(0, 1, 2000.0); // capacity is 1000
    let config = no_noise();
    let paths = shortest_paths(&t);
    let loads = link_loads(&t, &paths, &demands);
    let losses = pair_losses(&t, &paths, &paths, &loads, &FaultScenario::NoFault, &config);
    assert!((losses[pair_index(2, 0, 1)] - 0.5).abs() < 1e-12);
    // Links carry one aggregate load, so the reverse pair crosses the same
    // overloaded resource and sees the same loss.
    assert!((losses[pair_index(2, 1, 0)] - 0.5).abs() < 1e-12);
}

#[test]
fn losses_compose_across_hops() {
    let t = path3();
    let mut demands = DemandMatrix::zeros(3);
    demands.set_rate(0, 2, 2000.0); // both links at 2x capacity
    let config = no_noise();
    let paths = shortest_paths(&t);
    let loads = link_loads(&t, &paths, &demands);
    let losses = pair_losses(&t, &paths, &paths, &loads, &FaultScenario::NoFault, &config);
    // 1 - (1 - 0.5)^2 = 0.75
    assert!((losses[pair_index(3, 0, 2)] - 0.75).abs() < 1e-12);
}

#[test]
fn transient_loss_hits_only_prefault_users_of_the_removed_link() {
    let t = desk();
    let demands = DemandMatrix::uniform_random(10, 1.0, 10.0, 5); // no congestion
    let config = no_noise();
    let removed = LinkRef::new(1, 2);
    let v =
        measure_noiseless(&t, &demands, &FaultScenario::Disconnection { removed }, &config)
            .unwrap();
    let expected =
        config.reconvergence_time_ms / config.measurement_interval_ms;
    // Pairs (1,3) and (1,4) routed over (1,2) before the fault.
    for d in [3, 4] {
        let loss = v.losses()[pair_index(10, 1, d)];
        assert!((loss - expected).abs() < 1e-12, "pair (1,{d}) loss {loss}");
    }
    // Pair (1,8) has a direct link; no transient, no congestion.
    assert_eq!(v.losses()[pair_index(10, 1, 8)], 0.0);
}

// --- measurement assembly ---

#[test]
fn feature_vector_has_documented_shape() {
    assert_eq!(FeatureVector::feature_count(10), 270);
    let t = desk();
    let demands = DemandMatrix::uniform_random(10, 1.0, 300.0, 1);
    let v = measure_noiseless(&t, &demands, &FaultScenario::NoFault, &no_noise()).unwrap();
    assert_eq!(v.features.len(), 270);
    assert_eq!(v.rates().len(), 90);
    assert_eq!(v.delays().len(), 90);
    assert_eq!(v.losses().len(), 90);
    // Rates block is the demand matrix itself.
    for (i, (s, d)) in ordered_pairs(10).enumerate() {
        assert_eq!(v.rates()[i], demands.rate(s, d));
    }
    assert!(v.delays().iter().all(|&d| d > 0.0));
    assert!(v.losses().iter().all(|&l| (0.0..=1.0).contains(&l)));
}

#[test]
fn measure_with_zero_noise_equals_noiseless() {
    let t = desk();
    let demands = DemandMatrix::uniform_random(10, 1.0, 300.0, 1);
    let scenario = FaultScenario::Disconnection { removed: LinkRef::new(3, 5) };
    let a = measure_noiseless(&t, &demands, &scenario, &no_noise()).unwrap();
    let b = measure(&t, &demands, &scenario, &no_noise(), 123).unwrap();
    assert_eq!(a, b);
}

#[test]
fn measure_is_deterministic_per_seed() {
    let t = desk();
    let demands = DemandMatrix::uniform_random(10, 1.0, 300.0, 1);
    let config = SimConfig::default();
    let scenario = FaultScenario::NoFault;
    let a = measure(&t, &demands, &scenario, &config, 42).unwrap();
    let b = measure(&t, &demands, &scenario, &config, 42).unwrap();
    assert_eq!(a, b);
    let c = measure(&t, &demands, &scenario, &config, 43).unwrap();
    assert_ne!(a.features, c.features);
}

#[test]
fn noise_respects_block_ranges_and_zero_values() {
    let t = desk();
    let mut demands = DemandMatrix::uniform_random(10, 1.0, 300.0, 1);
    demands.set_rate(0, 1, 0.0);
    let mut v = measure_noiseless(&t, &demands, &FaultScenario::NoFault, &no_noise()).unwrap();
    apply_noise(&mut v, 0.5, 9); // exaggerated noise to stress the clamps
    assert_eq!(v.rates()[pair_index(10, 0, 1)], 0.0, "multiplicative noise keeps zeros");
    assert!(v.rates().iter().all(|&r| r >= 0.0));
    assert!(v.delays().iter().all(|&d| d > 0.0));
    assert!(v.losses().iter().all(|&l| (0.0..=1.0).contains(&l)));
}

// --- probe sweep ---

#[test]
fn two_node_probe_sweep_is_one_round_trip() {
    let t = Topology::new(
        2,
        vec![Link { ends: LinkRef::new(0, 1), capacity_mbps: 1000.0, length_m: 100.0 }],
    )
    .unwrap();
    let config = SimConfig { queueing_base_delay_us: 0.0, ..no_noise() };
    // 100 m at 2e8 m/s = 0.5 us one-way; RTT = 1.0 us; no overhead.
    let total = simulate_probe_sweep(&t, &config, 0, 0.0);
    assert!((total - 1.0).abs() < 1e-12, "{total}");
}

#[test]
fn probe_sweep_grows_with_network_size() {
    let props = LinkProps::default();
    let t30 = generate_small_world(30, 4, 0.2, 1, &props).unwrap();
    let t60 = generate_small_world(60, 4, 0.2, 1, &props).unwrap();
    let config = no_noise();
    let p30 = simulate_probe_sweep(&t30, &config, 0, 1.0);
    let p60 = simulate_probe_sweep(&t60, &config, 0, 1.0);
    assert!(p60 > p30, "{p60} vs {p30}");
}

#[test]
fn probe_sweep_scales_linearly_with_link_length() {
    let t = desk();
    let scaled = Topology::new(
        10,
        t.links()
            .iter()
            .map(|l| Link { ends: l.ends, capacity_mbps: l.capacity_mbps, length_m: 10.0 * l.length_m })
            .collect(),
    )
    .unwrap();
    let config = SimConfig { queueing_base_delay_us: 0.0, ..no_noise() };
    let base = simulate_probe_sweep(&t, &config, 0, 0.0);
    let long = simulate_probe_sweep(&scaled, &config, 0, 0.0);
    assert!((long - 10.0 * base).abs() < 1e-9 * long, "{long} vs 10x {base}");
}

// --- demand monotonicity (single spot check; fuzz lives in props) ---

#[test]
fn extra_demand_never_reduces_load_delay_or_loss() {
    let t = desk();
    let config = no_noise();
    let mut demands = DemandMatrix::uniform_random(10, 1.0, 250.0, 2);
    let paths = shortest_paths(&t);
    let loads_before = link_loads(&t, &paths, &demands);
    let delays_before = pair_delays(&t, &paths, &loads_before, &config);
    let losses_before =
        pair_losses(&t, &paths, &paths, &loads_before, &FaultScenario::NoFault, &config);

    demands.set_rate(1, 4, demands.rate(1, 4) + 500.0);
    let loads_after = link_loads(&t, &paths, &demands);
    let delays_after = pair_delays(&t, &paths, &loads_after, &config);
    let losses_after =
        pair_losses(&t, &paths, &paths, &loads_after, &FaultScenario::NoFault, &config);

    for (b, a) in loads_before.iter().zip(&loads_after) {
        assert!(a >= b);
    }
    for (b, a) in delays_before.iter().zip(&delays_after) {
        assert!(a >= b);
    }
    for (b, a) in losses_before.iter().zip(&losses_after) {
        assert!(a >= b);
    }
}
