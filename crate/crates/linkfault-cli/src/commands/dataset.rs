//! `dataset`: simulate every fault scenario and emit the per-stage CSVs
//! plus the run manifest.
//!
//! Four files families come out of one topology and one demand matrix:
//! stage 1 (no-fault + disconnections, split train/test), stage 2
//! (disconnection-only measurements for the delay regressor, split),
//! stage 3 (reconnections, split), and a mixed evaluation set over all
//! scenario kinds. Per-file noise seeds differ by fixed offsets so no two
//! files share a noise stream; everything else is common, so reruns are
//! byte-identical.

use anyhow::{ensure, Context, Result};
use linkfault::dataset::{generate_dataset, Dataset, DatasetParams};
use linkfault::topology::{enumerate_scenarios, sample_scenarios, FaultScenario, ScenarioKind, Topology};

use crate::config::ExperimentConfig;
use crate::manifest::{
    RowCounts, RunManifest, MANIFEST_FORMAT_VERSION, MIXED_TEST, STAGE1_TEST, STAGE1_TRAIN,
    STAGE2_TEST, STAGE2_TRAIN, STAGE3_TEST, STAGE3_TRAIN,
};

pub fn run(config: &ExperimentConfig) -> Result<()> {
    let topology = super::load_topology(&config.topology)?;
    let run_dir = &config.output.dir;
    std::fs::create_dir_all(run_dir)
        .with_context(|| format!("cannot create {}", run_dir.display()))?;

    let d = &config.dataset;
    let stage1_scenarios =
        enumerate_scenarios(&topology, &[ScenarioKind::NoFault, ScenarioKind::Disconnection], 0);
    ensure!(
        stage1_scenarios.len() >= 2,
        "topology has no removable links; nothing to learn"
    );
    let stage2_scenarios = enumerate_scenarios(&topology, &[ScenarioKind::Disconnection], 0);
    let reconnections_all = enumerate_scenarios(&topology, &[ScenarioKind::Reconnection], 0);
    let reconnections = if d.reconnection_cap > 0 {
        sample_scenarios(&reconnections_all, d.reconnection_cap, d.scenario_seed)
    } else {
        reconnections_all
    };
    let mixed_scenarios: Vec<FaultScenario> =
        stage1_scenarios.iter().chain(&reconnections).copied().collect();

    let mut counts = RowCounts::default();

    // Stage 1: no-fault + disconnections, stratified split.
    let stage1 = generate(&topology, &stage1_scenarios, d.samples_per_class, 0, config)?;
    let (train, test) = stage1.split(d.test_fraction, d.split_seed)?;
    counts.stage1_train = train.row_count();
    counts.stage1_test = test.row_count();
    train.write_csv(&run_dir.join(STAGE1_TRAIN))?;
    test.write_csv(&run_dir.join(STAGE1_TEST))?;
    let stage1_classes = stage1.label_space.clone();

    // Stage 2: disconnection measurements for the delay regressor.
    let stage2 = generate(&topology, &stage2_scenarios, d.stage2_samples_per_class, 1, config)?;
    let (train, test) = stage2.split(d.test_fraction, d.split_seed)?;
    counts.stage2_train = train.row_count();
    counts.stage2_test = test.row_count();
    train.write_csv(&run_dir.join(STAGE2_TRAIN))?;
    test.write_csv(&run_dir.join(STAGE2_TEST))?;
    let stage2_classes = stage2.label_space.clone();

    // Stage 3: reconnections, when the topology admits any.
    let stage3_classes = if reconnections.is_empty() {
        eprintln!("note: no reconnection scenarios exist; skipping stage-3 files");
        None
    } else {
        let stage3 = generate(&topology, &reconnections, d.stage3_samples_per_class, 2, config)?;
        let (train, test) = stage3.split(d.test_fraction, d.split_seed)?;
        counts.stage3_train = train.row_count();
        counts.stage3_test = test.row_count();
        train.write_csv(&run_dir.join(STAGE3_TRAIN))?;
        test.write_csv(&run_dir.join(STAGE3_TEST))?;
        Some(stage3.label_space.clone())
    };

    // Mixed evaluation set: all scenario kinds, fresh noise, no split.
    let mixed = generate(&topology, &mixed_scenarios, d.mixed_samples_per_class, 3, config)?;
    counts.mixed_test = mixed.row_count();
    mixed.write_csv(&run_dir.join(MIXED_TEST))?;

    let manifest = RunManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        topology_edge_list: topology.to_edge_list(),
        topology_fingerprint: topology.fingerprint(),
        sim: config.sim,
        dataset: d.clone(),
        stage1_classes,
        stage2_classes,
        stage3_classes,
        mixed_classes: mixed.label_space.clone(),
        counts: counts.clone(),
    };
    let path = manifest.save(run_dir)?;
    eprintln!(
        "dataset: {} rows across 7 files under {} (manifest {})",
        counts.stage1_train
            + counts.stage1_test
            + counts.stage2_train
            + counts.stage2_test
            + counts.stage3_train
            + counts.stage3_test
            + counts.mixed_test,
        run_dir.display(),
        path.display()
    );
    Ok(())
}

/// One simulated dataset; `noise_offset` keeps the per-file noise streams
/// disjoint while demand stays shared.
fn generate(
    topology: &Topology,
    scenarios: &[FaultScenario],
    samples_per_class: usize,
    noise_offset: u64,
    config: &ExperimentConfig,
) -> Result<Dataset> {
    let d = &config.dataset;
    let params = DatasetParams {
        samples_per_class,
        demand_range_mbps: d.demand_range_mbps,
        demand_seed: d.demand_seed,
        noise_seed: d.noise_seed.wrapping_add(noise_offset),
    };
    generate_dataset(topology, scenarios, &params, &config.sim).context("dataset generation failed")
}
