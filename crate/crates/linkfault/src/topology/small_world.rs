//! Small-world topology generation: a ring lattice where every node links to
//! its `k` nearest neighbors, plus per-node random shortcut edges.

use std::collections::BTreeSet;

use rand::Rng;

use super::{Link, LinkRef, Topology, TopologyError};
use crate::rng::{derive_seed, rng_from_seed};

/// Physical properties assigned to generated links.
#[derive(Clone, Copy, Debug)]
pub struct LinkProps {
    pub capacity_mbps: f64,
    /// Lengths are drawn uniformly from this range, meters.
    pub length_range_m: (f64, f64),
}

impl Default for LinkProps {
    fn default() -> Self {
        // 20..100 m corresponds to 0.1..0.5 us of propagation delay.
        LinkProps { capacity_mbps: 10_000.0, length_range_m: (20.0, 100.0) }
    }
}

/// Retry budget for the connectivity check. The ring lattice alone is
/// already connected for valid parameters, so retries are a safety net, not
/// an expected path.
const MAX_ATTEMPTS: usize = 16;

/// Generates a connected small-world topology.
///
/// Starts from a ring lattice where node `i` connects to `i +- 1..=k/2`
/// (mod `n`), then visits each node in id order and, with probability `p`,
/// adds one extra edge to a uniformly chosen node it is not yet adjacent to.
/// Deterministic for fixed inputs.
pub fn generate_small_world(
    n: usize,
    k: usize,
    p: f64,
    seed: u64,
    props: &LinkProps,
) -> Result<Topology, TopologyError> {
    if k >= n {
        return Err(TopologyError::InvalidParams(format!(
            "neighbor count k={k} must be smaller than node count n={n}"
        )));
    }
    if k < 2 || !k.is_multiple_of(2) {
        return Err(TopologyError::InvalidParams(format!(
            "neighbor count k={k} must be even and at least 2"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(TopologyError::InvalidParams(format!(
            "edge probability p={p} must lie in [0, 1]"
        )));
    }
    let (lo, hi) = props.length_range_m;
    if !(lo > 0.0 && hi >= lo) {
        return Err(TopologyError::InvalidParams(format!(
            "length range [{lo}, {hi}] must be positive and ordered"
        )));
    }

    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = rng_from_seed(derive_seed(seed, attempt as u64));
        let mut ends: BTreeSet<LinkRef> = BTreeSet::new();
        for i in 0..n {
            for j in 1..=k / 2 {
                ends.insert(LinkRef::new(i, (i + j) % n));
            }
        }
        for i in 0..n {
            if rng.gen::<f64>() >= p {
                continue;
            }
            let candidates: Vec<usize> = (0..n)
                .filter(|&t| t != i && !ends.contains(&LinkRef::new(i, t)))
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let target = candidates[rng.gen_range(0..candidates.len())];
            ends.insert(LinkRef::new(i, target));
        }
        // Sorted iteration keeps the length draws deterministic.
        let links: Vec<Link> = ends
            .into_iter()
            .map(|ends| Link {
                ends,
                capacity_mbps: props.capacity_mbps,
                length_m: if hi > lo { rng.gen_range(lo..hi) } else { lo },
            })
            .collect();
        match Topology::new(n, links) {
            Ok(topology) => return Ok(topology),
            Err(TopologyError::Validation(_)) => continue,
            Err(other) => return Err(other),
        }
    }
    Err(TopologyError::ConnectivityFailure(MAX_ATTEMPTS))
}
