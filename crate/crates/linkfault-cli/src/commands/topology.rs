//! `topology gen` / `topology import`: produce edge-list files.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use linkfault::topology::graphml::{load_graphml, GraphmlOptions};
use linkfault::topology::small_world::{generate_small_world, LinkProps};
use linkfault::topology::Topology;

use super::write_file;

#[derive(Subcommand)]
pub enum TopologyCommand {
    /// Generate a connected small-world graph.
    Gen(GenArgs),
    /// Convert a GraphML document (Internet Topology Zoo style) to an
    /// edge list, deriving link lengths from node coordinates.
    Import(ImportArgs),
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long)]
    pub nodes: usize,
    /// Ring-lattice neighbors per node (even).
    #[arg(long)]
    pub k: usize,
    /// Per-node shortcut probability.
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000.0)]
    pub capacity_mbps: f64,
    #[arg(long, default_value_t = 20.0)]
    pub length_min_m: f64,
    #[arg(long, default_value_t = 100.0)]
    pub length_max_m: f64,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ImportArgs {
    #[arg(long, value_name = "FILE")]
    pub graphml: PathBuf,
    #[arg(long, default_value_t = 10_000.0)]
    pub capacity_mbps: f64,
    /// Length for links whose endpoints lack coordinates.
    #[arg(long, default_value_t = 60.0)]
    pub default_length_m: f64,
    /// Fail on missing coordinates instead of falling back.
    #[arg(long)]
    pub strict_geo: bool,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

pub fn run(command: TopologyCommand) -> Result<()> {
    match command {
        TopologyCommand::Gen(args) => {
            let props = LinkProps {
                capacity_mbps: args.capacity_mbps,
                length_range_m: (args.length_min_m, args.length_max_m),
            };
            let topology = generate_small_world(args.nodes, args.k, args.p, args.seed, &props)?;
            write_file(&args.out, &topology.to_edge_list())?;
            summarize(&topology, &args.out);
            Ok(())
        }
        TopologyCommand::Import(args) => {
            let text = std::fs::read_to_string(&args.graphml)
                .with_context(|| format!("cannot read {}", args.graphml.display()))?;
            let options = GraphmlOptions {
                default_capacity_mbps: args.capacity_mbps,
                default_length_m: args.default_length_m,
                strict_geo: args.strict_geo,
            };
            let topology = load_graphml(&text, &options)
                .with_context(|| format!("invalid GraphML {}", args.graphml.display()))?;
            write_file(&args.out, &topology.to_edge_list())?;
            summarize(&topology, &args.out);
            Ok(())
        }
    }
}

/// Human summary on stdout: node/link counts and the degree histogram.
fn summarize(topology: &Topology, out: &std::path::Path) {
    println!("wrote {}", out.display());
    println!("nodes {}", topology.node_count());
    println!("links {}", topology.link_count());
    let max_degree = (0..topology.node_count()).map(|n| topology.degree(n)).max().unwrap_or(0);
    let mut histogram = vec![0usize; max_degree + 1];
    for n in 0..topology.node_count() {
        histogram[topology.degree(n)] += 1;
    }
    println!("degree histogram:");
    for (degree, count) in histogram.iter().enumerate() {
        if *count > 0 {
            println!("  {degree}: {count}");
        }
    }
}
