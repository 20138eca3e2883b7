//! Network topologies: construction, validation, file formats, and fault
//! mutations.
//!
//! A [`Topology`] is an undirected, connected graph with per-link capacity
//! and physical length. Instances are immutable after construction; fault
//! operations return mutated copies. Node ids are contiguous `0..V`.

pub mod graphml;
pub mod small_world;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Index of a node; ids are contiguous `0..node_count`.
pub type NodeId = usize;

/// Signal propagation speed used to convert link length to delay, in m/s.
pub const PROPAGATION_SPEED_M_PER_S: f64 = 2.0e8;

/// Errors from topology construction, parsing, and mutation.
#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no connected topology found after {0} attempts")]
    ConnectivityFailure(usize),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid topology: {0}")]
    Validation(String),
    #[error("unknown link {0}")]
    UnknownLink(LinkRef),
    #[error("duplicate link {0}")]
    DuplicateLink(LinkRef),
    #[error("removing link {0} disconnects the graph")]
    DisconnectsGraph(LinkRef),
    #[error("node {0:?} has no coordinates and strict geography is on")]
    MissingCoordinates(String),
    #[error("malformed GraphML: {0}")]
    Xml(String),
}

/// Canonical unordered endpoint pair naming a link; always `a < b`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct LinkRef {
    pub a: NodeId,
    pub b: NodeId,
}

impl LinkRef {
    /// Canonicalizes endpoint order. Panics on a self-loop; parsers reject
    /// self-loops before constructing a `LinkRef`.
    pub fn new(u: NodeId, v: NodeId) -> Self {
        assert_ne!(u, v, "a link cannot connect a node to itself");
        if u < v {
            LinkRef { a: u, b: v }
        } else {
            LinkRef { a: v, b: u }
        }
    }

    /// The link's source node: the smaller endpoint.
    pub fn source(&self) -> NodeId {
        self.a
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.a == n || self.b == n
    }

    /// The endpoint opposite to `n`; panics if `n` is not an endpoint.
    pub fn other(&self, n: NodeId) -> NodeId {
        if n == self.a {
            self.b
        } else if n == self.b {
            self.a
        } else {
            panic!("node {n} is not an endpoint of {self}");
        }
    }
}

impl fmt::Display for LinkRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// An undirected link with capacity and physical length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub ends: LinkRef,
    pub capacity_mbps: f64,
    pub length_m: f64,
}

impl Link {
    /// One-way propagation delay in microseconds implied by the length.
    pub fn prop_delay_us(&self) -> f64 {
        self.length_m / PROPAGATION_SPEED_M_PER_S * 1e6
    }
}

/// Ground-truth fault label: nothing, one removed link, or a removed link
/// replaced by a new link that shares the removed link's source node.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FaultScenario {
    NoFault,
    Disconnection { removed: LinkRef },
    Reconnection { removed: LinkRef, added: LinkRef },
}

impl FaultScenario {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            FaultScenario::NoFault => ScenarioKind::NoFault,
            FaultScenario::Disconnection { .. } => ScenarioKind::Disconnection,
            FaultScenario::Reconnection { .. } => ScenarioKind::Reconnection,
        }
    }

    pub fn removed(&self) -> Option<LinkRef> {
        match self {
            FaultScenario::NoFault => None,
            FaultScenario::Disconnection { removed } | FaultScenario::Reconnection { removed, .. } => {
                Some(*removed)
            }
        }
    }

    pub fn added(&self) -> Option<LinkRef> {
        match self {
            FaultScenario::Reconnection { added, .. } => Some(*added),
            _ => None,
        }
    }
}

impl fmt::Display for FaultScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultScenario::NoFault => write!(f, "no-fault"),
            FaultScenario::Disconnection { removed } => write!(f, "disconnect {removed}"),
            FaultScenario::Reconnection { removed, added } => {
                write!(f, "disconnect {removed} reconnect {added}")
            }
        }
    }
}

/// The three scenario families, used to select what to enumerate.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ScenarioKind {
    NoFault,
    Disconnection,
    Reconnection,
}

/// A validated, connected, undirected network graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    node_count: usize,
    /// Sorted by canonical endpoints; a link's index is its stable id.
    links: Vec<Link>,
    /// Per node: `(neighbor, link index)` sorted by neighbor id.
    adjacency: Vec<Vec<(NodeId, usize)>>,
}

impl Topology {
    /// Validates and indexes a link list. Rejects self-loops, duplicate
    /// links, out-of-range endpoints, non-positive capacities or lengths,
    /// and disconnected graphs.
    pub fn new(node_count: usize, mut links: Vec<Link>) -> Result<Self, TopologyError> {
        if node_count < 2 {
            return Err(TopologyError::Validation(format!(
                "a topology needs at least 2 nodes, got {node_count}"
            )));
        }
        links.sort_by_key(|l| l.ends);
        for pair in links.windows(2) {
            if pair[0].ends == pair[1].ends {
                return Err(TopologyError::Validation(format!(
                    "duplicate link {}",
                    pair[0].ends
                )));
            }
        }
        for link in &links {
            if link.ends.b >= node_count {
                return Err(TopologyError::Validation(format!(
                    "link {} endpoint out of range for {node_count} nodes",
                    link.ends
                )));
            }
            let capacity_ok = link.capacity_mbps.is_finite() && link.capacity_mbps > 0.0;
            if !capacity_ok {
                return Err(TopologyError::Validation(format!(
                    "link {} capacity must be positive",
                    link.ends
                )));
            }
            let length_ok = link.length_m.is_finite() && link.length_m > 0.0;
            if !length_ok {
                return Err(TopologyError::Validation(format!(
                    "link {} length must be positive",
                    link.ends
                )));
            }
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for (idx, link) in links.iter().enumerate() {
            adjacency[link.ends.a].push((link.ends.b, idx));
            adjacency[link.ends.b].push((link.ends.a, idx));
        }
        for neighbors in &mut adjacency {
            neighbors.sort_unstable();
        }
        let topology = Topology { node_count, links, adjacency };
        if !topology.is_connected_without(None) {
            return Err(TopologyError::Validation("graph is not connected".into()));
        }
        Ok(topology)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link(&self, index: usize) -> &Link {
        &self.links[index]
    }

    /// Index of the link with the given endpoints, if present.
    pub fn link_index(&self, ends: LinkRef) -> Option<usize> {
        self.links.binary_search_by_key(&ends, |l| l.ends).ok()
    }

    /// Neighbors of `n` as `(neighbor, link index)`, ascending by neighbor.
    pub fn neighbors(&self, n: NodeId) -> &[(NodeId, usize)] {
        &self.adjacency[n]
    }

    pub fn degree(&self, n: NodeId) -> usize {
        self.adjacency[n].len()
    }

    /// Breadth-first connectivity check, optionally ignoring one link.
    pub fn is_connected_without(&self, skip_link: Option<usize>) -> bool {
        let mut seen = vec![false; self.node_count];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, link_idx) in &self.adjacency[u] {
                if Some(link_idx) == skip_link || seen[v] {
                    continue;
                }
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
        reached == self.node_count
    }

    /// Indices of links whose removal keeps the graph connected.
    pub fn removable_links(&self) -> Vec<usize> {
        (0..self.links.len())
            .filter(|&idx| self.is_connected_without(Some(idx)))
            .collect()
    }

    /// Returns a mutated copy with the scenario applied; `self` is unchanged.
    ///
    /// A reconnection's added link inherits the removed link's capacity and
    /// length: the scenario models the same interface re-attaching elsewhere.
    pub fn apply_fault(&self, scenario: &FaultScenario) -> Result<Topology, TopologyError> {
        match scenario {
            FaultScenario::NoFault => Ok(self.clone()),
            FaultScenario::Disconnection { removed } => self.without_link(*removed),
            FaultScenario::Reconnection { removed, added } => {
                if added == removed {
                    return Err(TopologyError::Validation(
                        "reconnection must add a different link than it removes".into(),
                    ));
                }
                if !added.contains(removed.source()) {
                    return Err(TopologyError::Validation(format!(
                        "added link {added} does not share the source node of removed link {removed}"
                    )));
                }
                if added.b >= self.node_count {
                    return Err(TopologyError::Validation(format!(
                        "added link {added} endpoint out of range"
                    )));
                }
                if self.link_index(*added).is_some() {
                    return Err(TopologyError::DuplicateLink(*added));
                }
                let removed_idx = self
                    .link_index(*removed)
                    .ok_or(TopologyError::UnknownLink(*removed))?;
                let template = self.links[removed_idx];
                let mut topology = self.without_link(*removed)?;
                topology.insert_link(Link {
                    ends: *added,
                    capacity_mbps: template.capacity_mbps,
                    length_m: template.length_m,
                });
                Ok(topology)
            }
        }
    }

    fn without_link(&self, removed: LinkRef) -> Result<Topology, TopologyError> {
        let idx = self.link_index(removed).ok_or(TopologyError::UnknownLink(removed))?;
        if !self.is_connected_without(Some(idx)) {
            return Err(TopologyError::DisconnectsGraph(removed));
        }
        let mut links = self.links.clone();
        links.remove(idx);
        Topology::new(self.node_count, links)
    }

    fn insert_link(&mut self, link: Link) {
        let pos = self.links.partition_point(|l| l.ends < link.ends);
        self.links.insert(pos, link);
        // Rebuild adjacency; link indices shifted by the insertion.
        for neighbors in &mut self.adjacency {
            neighbors.clear();
        }
        for (idx, l) in self.links.iter().enumerate() {
            self.adjacency[l.ends.a].push((l.ends.b, idx));
            self.adjacency[l.ends.b].push((l.ends.a, idx));
        }
        for neighbors in &mut self.adjacency {
            neighbors.sort_unstable();
        }
    }

    /// Canonical edge-list text; fixed format so it doubles as the
    /// fingerprint preimage.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {} nodes, {} links\n", self.node_count, self.links.len()));
        out.push_str("# u v capacity_mbps length_m\n");
        for link in &self.links {
            out.push_str(&format!(
                "{} {} {} {}\n",
                link.ends.a, link.ends.b, link.capacity_mbps, link.length_m
            ));
        }
        out
    }

    /// Hex SHA-256 of the canonical edge list; identifies the topology in
    /// datasets, preprocessors, and model files.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_edge_list().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Parses the edge-list format: one `u v capacity_mbps length_m` line
    /// per link, `#` comments, blank lines ignored. Node ids must cover a
    /// contiguous `0..V` range.
    pub fn from_edge_list(text: &str) -> Result<Self, TopologyError> {
        let mut links = Vec::new();
        let mut max_node = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse = |field: &str, what: &str| -> Result<f64, TopologyError> {
                field.parse::<f64>().map_err(|_| TopologyError::Parse {
                    line: lineno + 1,
                    message: format!("invalid {what}: {field:?}"),
                })
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(TopologyError::Parse {
                    line: lineno + 1,
                    message: format!("expected 4 fields, got {}", fields.len()),
                });
            }
            let u = fields[0].parse::<usize>().map_err(|_| TopologyError::Parse {
                line: lineno + 1,
                message: format!("invalid node id: {:?}", fields[0]),
            })?;
            let v = fields[1].parse::<usize>().map_err(|_| TopologyError::Parse {
                line: lineno + 1,
                message: format!("invalid node id: {:?}", fields[1]),
            })?;
            if u == v {
                return Err(TopologyError::Validation(format!(
                    "self-loop at node {u} (line {})",
                    lineno + 1
                )));
            }
            let capacity = parse(fields[2], "capacity")?;
            let length = parse(fields[3], "length")?;
            max_node = max_node.max(u).max(v);
            links.push(Link { ends: LinkRef::new(u, v), capacity_mbps: capacity, length_m: length });
        }
        if links.is_empty() {
            return Err(TopologyError::Validation("edge list contains no links".into()));
        }
        let node_count = max_node + 1;
        let mut touched = vec![false; node_count];
        for link in &links {
            touched[link.ends.a] = true;
            touched[link.ends.b] = true;
        }
        if let Some(missing) = touched.iter().position(|t| !t) {
            return Err(TopologyError::Validation(format!(
                "node ids are not contiguous: {missing} is unused"
            )));
        }
        Topology::new(node_count, links)
    }
}

/// Enumerates fault scenarios of the requested kinds in a deterministic
/// order: `NoFault` first, then disconnections by link id, then
/// reconnections by (removed link id, added target node id).
///
/// Only links whose removal keeps the graph connected yield scenarios. A
/// reconnection pairs a removable link with every absent link at the removed
/// link's source node. Enumeration is exhaustive, so `seed` is unused today;
/// it is part of the signature for samplers layered on top (see
/// [`sample_scenarios`]).
pub fn enumerate_scenarios(
    topology: &Topology,
    kinds: &[ScenarioKind],
    seed: u64,
) -> Vec<FaultScenario> {
    let _ = seed;
    let mut scenarios = Vec::new();
    if kinds.contains(&ScenarioKind::NoFault) {
        scenarios.push(FaultScenario::NoFault);
    }
    let removable = topology.removable_links();
    if kinds.contains(&ScenarioKind::Disconnection) {
        for &idx in &removable {
            scenarios.push(FaultScenario::Disconnection { removed: topology.link(idx).ends });
        }
    }
    if kinds.contains(&ScenarioKind::Reconnection) {
        for &idx in &removable {
            let removed = topology.link(idx).ends;
            let source = removed.source();
            for target in 0..topology.node_count() {
                if target == source {
                    continue;
                }
                let added = LinkRef::new(source, target);
                if topology.link_index(added).is_some() {
                    continue;
                }
                scenarios.push(FaultScenario::Reconnection { removed, added });
            }
        }
    }
    scenarios
}

/// Deterministically samples `count` scenarios without replacement.
/// Returns all of them (in enumeration order) when `count >= len`.
pub fn sample_scenarios(scenarios: &[FaultScenario], count: usize, seed: u64) -> Vec<FaultScenario> {
    if count >= scenarios.len() {
        return scenarios.to_vec();
    }
    use rand::seq::SliceRandom;
    let mut rng = crate::rng::rng_from_seed(seed);
    let mut indices: Vec<usize> = (0..scenarios.len()).collect();
    indices.shuffle(&mut rng);
    indices.truncate(count);
    indices.sort_unstable();
    indices.into_iter().map(|i| scenarios[i]).collect()
}
