//! The run manifest: everything `dataset` decided, recorded so that later
//! subcommands (and reruns) reconstruct the exact same artifacts.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use linkfault::dataset::LabelSpace;
use linkfault::flowsim::SimConfig;
use linkfault::topology::Topology;
use serde::{Deserialize, Serialize};

use crate::config::DatasetSection;

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

/// Dataset file names inside a run directory.
pub const MANIFEST_FILE: &str = "manifest.json";
pub const STAGE1_TRAIN: &str = "stage1_train.csv";
pub const STAGE1_TEST: &str = "stage1_test.csv";
pub const STAGE2_TRAIN: &str = "stage2_train.csv";
pub const STAGE2_TEST: &str = "stage2_test.csv";
pub const STAGE3_TRAIN: &str = "stage3_train.csv";
pub const STAGE3_TEST: &str = "stage3_test.csv";
pub const MIXED_TEST: &str = "mixed_test.csv";

/// Row counts of every emitted dataset file.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowCounts {
    pub stage1_train: usize,
    pub stage1_test: usize,
    pub stage2_train: usize,
    pub stage2_test: usize,
    pub stage3_train: usize,
    pub stage3_test: usize,
    pub mixed_test: usize,
}

/// Everything needed to reproduce or reload the run's dataset files.
///
/// The topology is embedded as its canonical edge list, so a manifest plus
/// the CSVs is self-contained: no path in here depends on where the source
/// topology file lived.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub topology_edge_list: String,
    pub topology_fingerprint: String,
    pub sim: SimConfig,
    pub dataset: DatasetSection,
    /// No-fault + one class per removable link.
    pub stage1_classes: LabelSpace,
    /// Disconnection classes only (regression measurements).
    pub stage2_classes: LabelSpace,
    /// Reconnection classes; absent when the topology admits none.
    pub stage3_classes: Option<LabelSpace>,
    /// Every class the mixed evaluation set draws from.
    pub mixed_classes: LabelSpace,
    pub counts: RowCounts,
}

impl RunManifest {
    pub fn topology(&self) -> Result<Topology> {
        Topology::from_edge_list(&self.topology_edge_list)
            .context("manifest holds an invalid edge list")
    }

    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("manifest serialization cannot fail");
        text.push('\n');
        text
    }

    pub fn save(&self, run_dir: &Path) -> Result<PathBuf> {
        let path = run_dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_json())
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }

    pub fn load(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).with_context(|| {
            format!("cannot read {} (run `dataset` first?)", path.display())
        })?;
        let manifest: RunManifest =
            serde_json::from_str(&text).with_context(|| format!("corrupt {}", path.display()))?;
        anyhow::ensure!(
            manifest.format_version == MANIFEST_FORMAT_VERSION,
            "manifest format {} unsupported (expected {MANIFEST_FORMAT_VERSION})",
            manifest.format_version
        );
        Ok(manifest)
    }
}

/// `models/<stem>.json` inside the run directory.
pub fn model_path(run_dir: &Path, stem: &str) -> PathBuf {
    run_dir.join("models").join(format!("{stem}.json"))
}

/// `models/<stem>_curve.csv`: per-epoch training log of iterative learners.
pub fn curve_path(run_dir: &Path, stem: &str) -> PathBuf {
    run_dir.join("models").join(format!("{stem}_curve.csv"))
}

/// `eval/<name>` inside the run directory.
pub fn eval_path(run_dir: &Path, name: &str) -> PathBuf {
    run_dir.join("eval").join(name)
}
