//! GraphML ingestion for published topology data sets.
//!
//! Reads nodes, edges, and optional `Latitude`/`Longitude` node attributes
//! (key names matched case-insensitively). Link lengths come from the
//! great-circle distance between endpoint coordinates when both are present,
//! otherwise from a configured default. Duplicate edges are coalesced and
//! self-loop edges skipped, since published files are often multigraphs.

use std::collections::HashMap;

use quick_xml::events::Event;
use quick_xml::Reader;

use super::{Link, LinkRef, Topology, TopologyError};

/// Import options; capacities are not part of GraphML, so one default
/// applies to every link.
#[derive(Clone, Copy, Debug)]
pub struct GraphmlOptions {
    pub default_capacity_mbps: f64,
    /// Length used when either endpoint lacks coordinates.
    pub default_length_m: f64,
    /// When on, a node without coordinates is an error instead of falling
    /// back to the default length.
    pub strict_geo: bool,
}

impl Default for GraphmlOptions {
    fn default() -> Self {
        GraphmlOptions { default_capacity_mbps: 10_000.0, default_length_m: 60.0, strict_geo: false }
    }
}

/// Mean Earth radius, meters, for the great-circle distance.
const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Great-circle distance between two (latitude, longitude) points, degrees
/// in, meters out.
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().atan2((1.0 - a).sqrt())
}

#[derive(Default)]
struct NodeInfo {
    index: usize,
    latitude: Option<f64>,
    longitude: Option<f64>,
}

/// Parses a GraphML document into a validated topology.
pub fn load_graphml(text: &str, options: &GraphmlOptions) -> Result<Topology, TopologyError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);

    // key id -> "latitude" | "longitude"
    let mut coordinate_keys: HashMap<String, &'static str> = HashMap::new();
    let mut nodes: HashMap<String, NodeInfo> = HashMap::new();
    let mut node_order: Vec<String> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();

    // Parser state: the node whose <data> children we are reading, and the
    // data key whose text payload comes next.
    let mut current_node: Option<String> = None;
    let mut pending_key: Option<String> = None;

    let xml_err = |e: quick_xml::Error| TopologyError::Xml(e.to_string());
    let attr_err = |e: quick_xml::events::attributes::AttrError| TopologyError::Xml(e.to_string());

    loop {
        match reader.read_event().map_err(xml_err)? {
            Event::Start(start) | Event::Empty(start) => {
                let name = start.local_name().as_ref().to_vec();
                let get_attr = |wanted: &str| -> Result<Option<String>, TopologyError> {
                    for attr in start.attributes() {
                        let attr = attr.map_err(attr_err)?;
                        if attr.key.local_name().as_ref() == wanted.as_bytes() {
                            let value =
                                attr.unescape_value().map_err(xml_err)?.into_owned();
                            return Ok(Some(value));
                        }
                    }
                    Ok(None)
                };
                match name.as_slice() {
                    b"key" => {
                        let id = get_attr("id")?;
                        let attr_name = get_attr("attr.name")?.or(get_attr("name")?);
                        if let (Some(id), Some(attr_name)) = (id, attr_name) {
                            match attr_name.to_ascii_lowercase().as_str() {
                                "latitude" => {
                                    coordinate_keys.insert(id, "latitude");
                                }
                                "longitude" => {
                                    coordinate_keys.insert(id, "longitude");
                                }
                                _ => {}
                            }
                        }
                    }
                    b"node" => {
                        let id = get_attr("id")?.ok_or_else(|| {
                            TopologyError::Xml("node element without id".into())
                        })?;
                        let index = nodes.len();
                        if nodes
                            .insert(id.clone(), NodeInfo { index, ..NodeInfo::default() })
                            .is_some()
                        {
                            return Err(TopologyError::Xml(format!("duplicate node id {id:?}")));
                        }
                        node_order.push(id.clone());
                        current_node = Some(id);
                    }
                    b"edge" => {
                        let source = get_attr("source")?.ok_or_else(|| {
                            TopologyError::Xml("edge element without source".into())
                        })?;
                        let target = get_attr("target")?.ok_or_else(|| {
                            TopologyError::Xml("edge element without target".into())
                        })?;
                        edges.push((source, target));
                        current_node = None;
                    }
                    b"data" => {
                        pending_key = get_attr("key")?;
                    }
                    _ => {}
                }
            }
            Event::Text(text) => {
                if let (Some(node_id), Some(key)) = (&current_node, &pending_key) {
                    if let Some(&which) = coordinate_keys.get(key.as_str()) {
                        let raw = text.unescape().map_err(xml_err)?;
                        let value = raw.trim().parse::<f64>().map_err(|_| {
                            TopologyError::Xml(format!(
                                "node {node_id:?}: {which} is not a number: {raw:?}"
                            ))
                        })?;
                        let info = nodes.get_mut(node_id).expect("current node is registered");
                        match which {
                            "latitude" => info.latitude = Some(value),
                            _ => info.longitude = Some(value),
                        }
                    }
                }
            }
            Event::End(end) => match end.local_name().as_ref() {
                b"node" => current_node = None,
                b"data" => pending_key = None,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }

    if nodes.len() < 2 {
        return Err(TopologyError::Validation(format!(
            "GraphML defines {} nodes; at least 2 required",
            nodes.len()
        )));
    }

    if options.strict_geo {
        for id in &node_order {
            let info = &nodes[id];
            if info.latitude.is_none() || info.longitude.is_none() {
                return Err(TopologyError::MissingCoordinates(id.clone()));
            }
        }
    }

    let mut links: Vec<Link> = Vec::new();
    let mut seen: HashMap<LinkRef, ()> = HashMap::new();
    for (source, target) in &edges {
        let s = nodes
            .get(source)
            .ok_or_else(|| TopologyError::Xml(format!("edge references unknown node {source:?}")))?;
        let t = nodes
            .get(target)
            .ok_or_else(|| TopologyError::Xml(format!("edge references unknown node {target:?}")))?;
        if s.index == t.index {
            continue; // self-loop in the source data
        }
        let ends = LinkRef::new(s.index, t.index);
        if seen.insert(ends, ()).is_some() {
            continue; // parallel edge in the source data
        }
        let length_m = match (s.latitude, s.longitude, t.latitude, t.longitude) {
            (Some(lat1), Some(lon1), Some(lat2), Some(lon2)) => {
                // Co-located or zero-distance points still need a usable link.
                haversine_m(lat1, lon1, lat2, lon2).max(options.default_length_m.min(1.0))
            }
            _ => options.default_length_m,
        };
        links.push(Link { ends, capacity_mbps: options.default_capacity_mbps, length_m });
    }

    Topology::new(nodes.len(), links)
}
