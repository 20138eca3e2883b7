pub mod compare;
pub mod dataset;
pub mod diagnose;
pub mod evaluate;
pub mod topology;
pub mod train;

use anyhow::{Context, Result};
use linkfault::topology::Topology;

use crate::config::TopologySource;

/// Resolves the configured topology: read from disk or generate.
pub fn load_topology(source: &TopologySource) -> Result<Topology> {
    match source {
        TopologySource::File { path } => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read topology {}", path.display()))?;
            Topology::from_edge_list(&text)
                .with_context(|| format!("invalid topology {}", path.display()))
        }
        TopologySource::SmallWorld { nodes, k, p, seed, capacity_mbps, length_range_m } => {
            let props = linkfault::topology::small_world::LinkProps {
                capacity_mbps: *capacity_mbps,
                length_range_m: *length_range_m,
            };
            linkfault::topology::small_world::generate_small_world(*nodes, *k, *p, *seed, &props)
                .context("small-world generation failed")
        }
    }
}

/// Writes a file, creating parent directories first.
pub fn write_file(path: &std::path::Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}
