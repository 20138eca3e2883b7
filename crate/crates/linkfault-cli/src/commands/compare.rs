//! `compare-baseline`: race the trained pipeline against active ping
//! probing over every disconnection scenario of one or more finished runs.
//!
//! Output CSV has one row per (method, topology) pair: localization
//! accuracy and mean localization time in microseconds. The pipeline reads
//! passively collected features, so its time is inference only; the
//! baseline pays for its probes on the simulated network plus analysis.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use linkfault::baseline::{probe_and_localize, BaselineConfig};
use linkfault::flowsim::{measure, DemandMatrix};
use linkfault::learners::ModelEnvelope;
use linkfault::linalg::Matrix;
use linkfault::pipeline::Pipeline;
use linkfault::rng::derive_seed;

use crate::manifest::{model_path, RunManifest};

use super::train::Algo;

#[derive(Args)]
pub struct CompareArgs {
    /// Run directory with a manifest and trained models. Repeatable.
    #[arg(long = "run", value_name = "DIR", required = true)]
    pub runs: Vec<PathBuf>,
    /// Stage-1 model family to load from each run.
    #[arg(long, value_enum, default_value = "rf")]
    pub algo: Algo,
    /// Delay-error threshold for the pipeline.
    #[arg(long, default_value_t = 0.10)]
    pub threshold: f64,
    /// Monitor node issuing the baseline's pings.
    #[arg(long, default_value_t = 0)]
    pub monitor: usize,
    /// Pings per destination per sweep.
    #[arg(long, default_value_t = 16)]
    pub probes_per_destination: usize,
    /// Fixed per-probe processing overhead, microseconds.
    #[arg(long, default_value_t = 1.0)]
    pub per_probe_overhead_us: f64,
    /// Output CSV path; `-` prints to stdout.
    #[arg(long, value_name = "FILE", default_value = "comparison.csv")]
    pub out: PathBuf,
}

pub fn run(args: &CompareArgs) -> Result<()> {
    let mut csv = String::from("method,topology,accuracy,localization_time_us\n");
    for run_dir in &args.runs {
        let name = run_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| run_dir.display().to_string());
        let (ml, probe) = compare_run(run_dir, args)
            .with_context(|| format!("comparison failed for run {}", run_dir.display()))?;
        csv.push_str(&format!("ml-lfil,{name},{:.4},{:.2}\n", ml.0, ml.1));
        csv.push_str(&format!("ping-probe,{name},{:.4},{:.2}\n", probe.0, probe.1));
    }
    if args.out.as_os_str() == "-" {
        print!("{csv}");
    } else {
        super::write_file(&args.out, &csv)?;
        eprintln!("wrote {}", args.out.display());
    }
    Ok(())
}

/// (accuracy, mean time in µs) for the pipeline and for the baseline.
fn compare_run(run_dir: &Path, args: &CompareArgs) -> Result<((f64, f64), (f64, f64))> {
    let manifest = RunManifest::load(run_dir)?;
    let topology = manifest.topology()?;
    let (lo, hi) = manifest.dataset.demand_range_mbps;
    // Same derivation as dataset generation: identical traffic conditions.
    let demands = DemandMatrix::uniform_random(
        topology.node_count(),
        lo,
        hi,
        derive_seed(manifest.dataset.demand_seed, 0),
    );

    let stage1 = ModelEnvelope::load(
        &model_path(run_dir, &format!("stage1_{}", args.algo.stem())),
        Some(&manifest.topology_fingerprint),
    )?;
    let regressor = ModelEnvelope::load(
        &model_path(run_dir, "stage2_regressor"),
        Some(&manifest.topology_fingerprint),
    )?;
    let pipeline = Pipeline::new(stage1, regressor, None, args.threshold)?;

    let baseline_config = BaselineConfig {
        monitor: args.monitor,
        probes_per_destination: args.probes_per_destination,
        per_probe_overhead_us: args.per_probe_overhead_us,
    };

    let scenarios = manifest.stage2_classes.classes().to_vec();
    let mut ml_hits = 0usize;
    let mut ml_time_us = 0.0;
    let mut probe_hits = 0usize;
    let mut probe_time_us = 0.0;
    for (index, scenario) in scenarios.iter().enumerate() {
        let removed = scenario.removed().expect("stage-2 classes are disconnections");
        let faulted = topology.apply_fault(scenario)?;

        let vector = measure(
            &topology,
            &demands,
            scenario,
            &manifest.sim,
            derive_seed(manifest.dataset.noise_seed.wrapping_add(7), index as u64),
        )?;
        let features = Matrix::from_vec(1, vector.features.len(), vector.features.clone());
        let diagnosis = pipeline.diagnose(features.row(0))?;
        if diagnosis.disconnected == Some(removed) {
            ml_hits += 1;
        }
        ml_time_us += diagnosis.inference_time_us;

        let (predicted, report) =
            probe_and_localize(&faulted, &topology, &demands, &baseline_config, &manifest.sim)?;
        if predicted == removed {
            probe_hits += 1;
        }
        probe_time_us += report.total_time_us();
    }

    let n = scenarios.len().max(1) as f64;
    Ok((
        (ml_hits as f64 / n, ml_time_us / n),
        (probe_hits as f64 / n, probe_time_us / n),
    ))
}
