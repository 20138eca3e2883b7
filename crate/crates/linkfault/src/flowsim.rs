//! Flow-level steady-state network simulation.
//!
//! All-pairs demands route over hop-shortest paths; per-link utilization
//! produces a queueing delay term and congestion loss; fault scenarios add a
//! transient reroute loss for flows whose pre-fault path used the removed
//! link. The end product is the per-pair measurement vector consumed by the
//! learners: rates, round-trip delays, and loss ratios for every ordered
//! node pair.

use serde::{Deserialize, Serialize};

use crate::rng::{rng_from_seed, standard_normal};
use crate::topology::{FaultScenario, LinkRef, NodeId, Topology, TopologyError};

/// Aggregate flow rates between ordered node pairs, Mbps. Diagonal is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandMatrix {
    node_count: usize,
    rates: Vec<f64>,
}

impl DemandMatrix {
    pub fn zeros(node_count: usize) -> Self {
        DemandMatrix { node_count, rates: vec![0.0; node_count * node_count] }
    }

    /// Draws each ordered pair's rate uniformly from `[lo, hi]` Mbps, in
    /// lexicographic pair order, deterministically for a fixed seed.
    pub fn uniform_random(node_count: usize, lo: f64, hi: f64, seed: u64) -> Self {
        assert!(lo >= 0.0 && hi >= lo, "demand range must be ordered and non-negative");
        let mut rng = rng_from_seed(seed);
        let mut demands = DemandMatrix::zeros(node_count);
        for (s, d) in ordered_pairs(node_count) {
            use rand::Rng;
            let rate = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            demands.set_rate(s, d, rate);
        }
        demands
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    #[inline]
    pub fn rate(&self, s: NodeId, d: NodeId) -> f64 {
        self.rates[s * self.node_count + d]
    }

    pub fn set_rate(&mut self, s: NodeId, d: NodeId, rate: f64) {
        assert_ne!(s, d, "demand diagonal is fixed at zero");
        assert!(rate >= 0.0 && rate.is_finite(), "rates must be non-negative");
        self.rates[s * self.node_count + d] = rate;
    }
}

/// Hop-shortest forward paths for every ordered pair, stored as node
/// sequences (`s..=d`). Ties are broken toward the lexicographically
/// smallest node sequence, so the table is a pure function of the topology.
#[derive(Clone, Debug, PartialEq)]
pub struct PathTable {
    node_count: usize,
    paths: Vec<Vec<NodeId>>,
}

impl PathTable {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Node sequence from `s` to `d`; empty slice when `s == d`.
    pub fn path(&self, s: NodeId, d: NodeId) -> &[NodeId] {
        &self.paths[s * self.node_count + d]
    }

    pub fn hop_count(&self, s: NodeId, d: NodeId) -> usize {
        self.path(s, d).len().saturating_sub(1)
    }

    /// Whether the forward path `s -> d` traverses the given link.
    pub fn contains_link(&self, s: NodeId, d: NodeId, link: LinkRef) -> bool {
        self.path(s, d).windows(2).any(|hop| LinkRef::new(hop[0], hop[1]) == link)
    }
}

/// Parameters of the steady-state model and the measurement process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Queueing delay at zero utilization, microseconds per hop.
    pub queueing_base_delay_us: f64,
    /// Utilization is capped here inside the delay formula so overloaded
    /// links keep a finite delay. Must lie in (0, 1).
    pub max_utilization_cap: f64,
    /// Rerouting window after a fault, milliseconds; packets in flight on
    /// the broken path during this window are lost.
    pub reconvergence_time_ms: f64,
    /// Time between successive measurements, milliseconds.
    pub measurement_interval_ms: f64,
    /// Standard deviation of the multiplicative measurement noise, as a
    /// fraction of the true value.
    pub noise_std_fraction: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            queueing_base_delay_us: 0.5,
            max_utilization_cap: 0.95,
            reconvergence_time_ms: 50.0,
            measurement_interval_ms: 1000.0,
            noise_std_fraction: 0.02,
        }
    }
}

/// One labeled measurement: rates, then round-trip delays, then loss
/// ratios, each block in lexicographic ordered-pair order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub node_count: usize,
    pub features: Vec<f64>,
    pub label: FaultScenario,
}

impl FeatureVector {
    /// Total feature count for a `v`-node network: three blocks of
    /// `v * (v - 1)` ordered pairs.
    pub fn feature_count(v: usize) -> usize {
        3 * v * (v - 1)
    }

    fn block(&self, index: usize) -> &[f64] {
        let n = self.node_count * (self.node_count - 1);
        &self.features[index * n..(index + 1) * n]
    }

    pub fn rates(&self) -> &[f64] {
        self.block(0)
    }

    pub fn delays(&self) -> &[f64] {
        self.block(1)
    }

    pub fn losses(&self) -> &[f64] {
        self.block(2)
    }
}

/// Ordered node pairs `(s, d)`, `s != d`, in lexicographic order: the
/// canonical feature ordering.
pub fn ordered_pairs(v: usize) -> impl Iterator<Item = (NodeId, NodeId)> {
    (0..v).flat_map(move |s| (0..v).filter_map(move |d| (s != d).then_some((s, d))))
}

/// Position of the pair `(s, d)` within one `v * (v - 1)` feature block.
pub fn pair_index(v: usize, s: NodeId, d: NodeId) -> usize {
    debug_assert_ne!(s, d);
    s * (v - 1) + if d > s { d - 1 } else { d }
}

/// Computes hop-shortest forward paths for all ordered pairs.
///
/// For every destination, a breadth-first search yields hop distances; the
/// path is then built forward, always stepping to the smallest-id neighbor
/// that stays on a shortest path. Panics if the topology is disconnected,
/// which validated topologies cannot be.
pub fn shortest_paths(topology: &Topology) -> PathTable {
    let v = topology.node_count();
    let mut dist_to: Vec<Vec<u32>> = Vec::with_capacity(v);
    for d in 0..v {
        let mut dist = vec![u32::MAX; v];
        dist[d] = 0;
        let mut queue = std::collections::VecDeque::from([d]);
        while let Some(u) = queue.pop_front() {
            for &(w, _) in topology.neighbors(u) {
                if dist[w] == u32::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        assert!(
            dist.iter().all(|&x| x != u32::MAX),
            "topology invariant violated: node unreachable from {d}"
        );
        dist_to.push(dist);
    }

    let mut paths = vec![Vec::new(); v * v];
    for (s, d) in ordered_pairs(v) {
        let dist = &dist_to[d];
        let mut path = Vec::with_capacity(dist[s] as usize + 1);
        let mut u = s;
        path.push(u);
        while u != d {
            // Neighbors are sorted by id, so the first one that decreases
            // the distance gives the lexicographically smallest sequence.
            let next = topology
                .neighbors(u)
                .iter()
                .map(|&(w, _)| w)
                .find(|&w| dist[w] + 1 == dist[u])
                .expect("a shortest path always has a descending neighbor");
            path.push(next);
            u = next;
        }
        paths[s * v + d] = path;
    }
    PathTable { node_count: v, paths }
}

/// Sums each ordered pair's rate onto every link of its forward path.
pub fn link_loads(topology: &Topology, paths: &PathTable, demands: &DemandMatrix) -> Vec<f64> {
    assert_eq!(paths.node_count(), topology.node_count());
    assert_eq!(demands.node_count(), topology.node_count());
    let mut loads = vec![0.0; topology.link_count()];
    for (s, d) in ordered_pairs(topology.node_count()) {
        let rate = demands.rate(s, d);
        if rate == 0.0 {
            continue;
        }
        for hop in paths.path(s, d).windows(2) {
            let idx = topology
                .link_index(LinkRef::new(hop[0], hop[1]))
                .expect("paths only traverse existing links");
            loads[idx] += rate;
        }
    }
    loads
}

/// One-way delay of a link carrying `load_mbps`: propagation plus an
/// M/M/1-shaped queueing term with utilization capped below 1.
pub fn link_delay_us(link: &crate::topology::Link, load_mbps: f64, config: &SimConfig) -> f64 {
    let utilization = (load_mbps / link.capacity_mbps).min(config.max_utilization_cap);
    link.prop_delay_us() + config.queueing_base_delay_us / (1.0 - utilization)
}

/// Round-trip delay for every ordered pair: the forward path's one-way
/// delays plus the reverse path's, microseconds.
pub fn pair_delays(
    topology: &Topology,
    paths: &PathTable,
    loads: &[f64],
    config: &SimConfig,
) -> Vec<f64> {
    let v = topology.node_count();
    let one_way = |s: NodeId, d: NodeId| -> f64 {
        paths
            .path(s, d)
            .windows(2)
            .map(|hop| {
                let idx = topology
                    .link_index(LinkRef::new(hop[0], hop[1]))
                    .expect("paths only traverse existing links");
                link_delay_us(topology.link(idx), loads[idx], config)
            })
            .sum()
    };
    ordered_pairs(v).map(|(s, d)| one_way(s, d) + one_way(d, s)).collect()
}

/// Loss ratio for every ordered pair in `[0, 1]`.
///
/// Each link drops the excess over its capacity: `max(0, load - cap) / load`.
/// Losses compose along the forward path as `1 - prod(1 - loss)`. Pairs
/// whose pre-fault path used the removed link additionally lose the
/// fraction of the measurement interval spent rerouting.
pub fn pair_losses(
    topology: &Topology,
    paths: &PathTable,
    prefault_paths: &PathTable,
    loads: &[f64],
    scenario: &FaultScenario,
    config: &SimConfig,
) -> Vec<f64> {
    let v = topology.node_count();
    let link_loss: Vec<f64> = topology
        .links()
        .iter()
        .zip(loads)
        .map(|(link, &load)| {
            if load > link.capacity_mbps {
                (load - link.capacity_mbps) / load
            } else {
                0.0
            }
        })
        .collect();
    let transient = match scenario {
        FaultScenario::NoFault => 0.0,
        _ => (config.reconvergence_time_ms / config.measurement_interval_ms).clamp(0.0, 1.0),
    };
    ordered_pairs(v)
        .map(|(s, d)| {
            let mut delivered: f64 = paths
                .path(s, d)
                .windows(2)
                .map(|hop| {
                    let idx = topology
                        .link_index(LinkRef::new(hop[0], hop[1]))
                        .expect("paths only traverse existing links");
                    1.0 - link_loss[idx]
                })
                .product();
            if let Some(removed) = scenario.removed() {
                if prefault_paths.contains_link(s, d, removed) {
                    delivered *= 1.0 - transient;
                }
            }
            (1.0 - delivered).clamp(0.0, 1.0)
        })
        .collect()
}

/// Simulates the fault, composes rates, delays, and losses into a feature
/// vector, and labels it. No measurement noise; see [`measure`].
pub fn measure_noiseless(
    base: &Topology,
    demands: &DemandMatrix,
    scenario: &FaultScenario,
    config: &SimConfig,
) -> Result<FeatureVector, TopologyError> {
    let v = base.node_count();
    let faulted = base.apply_fault(scenario)?;
    let prefault_paths = shortest_paths(base);
    let paths = shortest_paths(&faulted);
    let loads = link_loads(&faulted, &paths, demands);
    let delays = pair_delays(&faulted, &paths, &loads, config);
    let losses = pair_losses(&faulted, &paths, &prefault_paths, &loads, scenario, config);

    let n = v * (v - 1);
    let mut features = Vec::with_capacity(3 * n);
    features.extend(ordered_pairs(v).map(|(s, d)| demands.rate(s, d)));
    features.extend(delays);
    features.extend(losses);
    Ok(FeatureVector { node_count: v, features, label: *scenario })
}

/// Applies multiplicative Gaussian noise in place: every feature becomes
/// `x * (1 + noise_std_fraction * g)` with `g` standard normal, then is
/// clamped back to its block's valid range (rates and delays non-negative,
/// losses in `[0, 1]`). Exactly one normal value is consumed per feature,
/// so the mapping from seed to noise pattern is independent of the values.
pub fn apply_noise(vector: &mut FeatureVector, noise_std_fraction: f64, seed: u64) {
    let mut rng = rng_from_seed(seed);
    let n = vector.node_count * (vector.node_count - 1);
    for (i, x) in vector.features.iter_mut().enumerate() {
        let g = standard_normal(&mut rng);
        *x *= 1.0 + noise_std_fraction * g;
        *x = if i < n {
            x.max(0.0)
        } else if i < 2 * n {
            // Delays are strictly positive; the floor is unreachable at
            // realistic noise levels but keeps the invariant total.
            x.max(1e-9)
        } else {
            x.clamp(0.0, 1.0)
        };
    }
}

/// [`measure_noiseless`] plus [`apply_noise`]: the full measurement process.
/// Deterministic for fixed inputs and seed.
pub fn measure(
    base: &Topology,
    demands: &DemandMatrix,
    scenario: &FaultScenario,
    config: &SimConfig,
    seed: u64,
) -> Result<FeatureVector, TopologyError> {
    let mut vector = measure_noiseless(base, demands, scenario, config)?;
    apply_noise(&mut vector, config.noise_std_fraction, seed);
    Ok(vector)
}

/// Simulated wall time, microseconds, for `monitor` to ping every other
/// node once, sequentially, on an idle network: the sum of round-trip
/// delays at zero load plus a fixed per-probe overhead.
pub fn simulate_probe_sweep(
    topology: &Topology,
    config: &SimConfig,
    monitor: NodeId,
    per_probe_overhead_us: f64,
) -> f64 {
    let paths = shortest_paths(topology);
    let loads = vec![0.0; topology.link_count()];
    let delays = pair_delays(topology, &paths, &loads, config);
    let v = topology.node_count();
    (0..v)
        .filter(|&d| d != monitor)
        .map(|d| delays[pair_index(v, monitor, d)] + per_probe_overhead_us)
        .sum()
}
