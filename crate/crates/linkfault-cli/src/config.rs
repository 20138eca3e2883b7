//! Experiment configuration: a TOML file with one section per concern,
//! every key overridable from the command line via `--set section.key=value`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use linkfault::dataset::preprocess::PreprocessParams;
use linkfault::flowsim::SimConfig;
use linkfault::learners::forest::ForestParams;
use linkfault::learners::mlp::MlpParams;
use linkfault::learners::svm::SvmParams;
use serde::{Deserialize, Serialize};

/// Where the topology comes from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum TopologySource {
    /// An edge-list file (`u v capacity_mbps length_m` lines).
    File { path: PathBuf },
    /// Generated small-world graph; see the `topology gen` subcommand for
    /// a one-off equivalent.
    SmallWorld {
        nodes: usize,
        k: usize,
        p: f64,
        seed: u64,
        #[serde(default = "default_capacity")]
        capacity_mbps: f64,
        #[serde(default = "default_length_range")]
        length_range_m: (f64, f64),
    },
}

fn default_capacity() -> f64 {
    10_000.0
}

fn default_length_range() -> (f64, f64) {
    (20.0, 100.0)
}

/// Sample counts, seeds, and split controls for `dataset`.
///
/// All seeds are explicit: two runs from the same config produce identical
/// files. Per-file noise seeds are derived from `noise_seed` with fixed
/// offsets so no two emitted files share a noise stream.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSection {
    /// Rows per class in the stage-1 (no-fault + disconnection) set.
    pub samples_per_class: usize,
    /// Rows per class in the stage-2 (disconnection-only regression) set.
    pub stage2_samples_per_class: usize,
    /// Rows per class in the stage-3 (reconnection) set.
    pub stage3_samples_per_class: usize,
    /// Rows per class in the mixed evaluation set.
    pub mixed_samples_per_class: usize,
    /// Uniform per-pair demand range, Mbps.
    pub demand_range_mbps: (f64, f64),
    pub demand_seed: u64,
    pub noise_seed: u64,
    /// Held-out fraction for the train/test splits.
    pub test_fraction: f64,
    pub split_seed: u64,
    /// Cap on reconnection classes (0 keeps all); classes beyond the cap
    /// are dropped by a seeded without-replacement sample.
    pub reconnection_cap: usize,
    pub scenario_seed: u64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            samples_per_class: 200,
            stage2_samples_per_class: 60,
            stage3_samples_per_class: 100,
            mixed_samples_per_class: 30,
            demand_range_mbps: (1.0, 300.0),
            demand_seed: 11,
            noise_seed: 12,
            test_fraction: 0.2,
            split_seed: 13,
            reconnection_cap: 12,
            scenario_seed: 17,
        }
    }
}

/// Optional normalization + PCA applied in front of stage-1/3 classifiers.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessSection {
    pub enabled: bool,
    #[serde(flatten)]
    pub params: PreprocessParams,
}

/// One trainer section per algorithm; `regressor` is the stage-2 MLP.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    pub rf: ForestParams,
    pub mlp: MlpParams,
    pub svm: SvmParams,
    pub regressor: MlpParams,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            rf: ForestParams::default(),
            mlp: MlpParams::classifier_default(),
            svm: SvmParams::default(),
            regressor: MlpParams::regressor_default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSection {
    /// Relative-RMSE boundary between "only the tentative link is down"
    /// and "something was also reconnected".
    pub delay_error_threshold: f64,
}

impl Default for PipelineSection {
    fn default() -> Self {
        PipelineSection { delay_error_threshold: 0.10 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineSection {
    pub monitor: usize,
    pub probes_per_destination: usize,
    pub per_probe_overhead_us: f64,
}

impl Default for BaselineSection {
    fn default() -> Self {
        let d = linkfault::baseline::BaselineConfig::default();
        BaselineSection {
            monitor: d.monitor,
            probes_per_destination: d.probes_per_destination,
            per_probe_overhead_us: d.per_probe_overhead_us,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputSection {
    /// Run directory: datasets, manifest, models, and reports live here.
    pub dir: PathBuf,
}

/// The whole experiment file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub topology: TopologySource,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub preprocess: PreprocessSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub baseline: BaselineSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    /// Loads a config file and applies `--set section.key=value` overrides
    /// on the parsed TOML before typed deserialization, so overrides are
    /// validated exactly like file contents. Sections other than
    /// `[topology]` and `[output]` may be partial or absent; missing keys
    /// take their defaults.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut table: toml::Table = text
            .parse()
            .with_context(|| format!("config {} is not valid TOML", path.display()))?;
        for setting in overrides {
            apply_override(&mut table, setting)?;
        }
        Self::from_table(table)
            .with_context(|| format!("config {} has invalid contents", path.display()))
    }

    fn from_table(mut table: toml::Table) -> Result<Self> {
        fill_defaults(&mut table, "sim", &SimConfig::default())?;
        fill_defaults(&mut table, "dataset", &DatasetSection::default())?;
        fill_defaults(&mut table, "preprocess", &PreprocessSection::default())?;
        fill_defaults(&mut table, "train", &TrainSection::default())?;
        fill_defaults(&mut table, "pipeline", &PipelineSection::default())?;
        fill_defaults(&mut table, "baseline", &BaselineSection::default())?;
        let config: ExperimentConfig = toml::Value::Table(table).try_into()?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        for (name, count) in [
            ("samples_per_class", d.samples_per_class),
            ("stage2_samples_per_class", d.stage2_samples_per_class),
            ("stage3_samples_per_class", d.stage3_samples_per_class),
            ("mixed_samples_per_class", d.mixed_samples_per_class),
        ] {
            if count < 2 {
                bail!("dataset.{name} must be at least 2 (splits keep one row per side)");
            }
        }
        if !(d.test_fraction > 0.0 && d.test_fraction < 1.0) {
            bail!("dataset.test_fraction must lie strictly between 0 and 1");
        }
        let (lo, hi) = d.demand_range_mbps;
        if !(lo >= 0.0 && hi >= lo) {
            bail!("dataset.demand_range_mbps must be ordered and non-negative");
        }
        let t = self.pipeline.delay_error_threshold;
        if !(t > 0.0 && t < 1.0) {
            bail!("pipeline.delay_error_threshold must lie strictly between 0 and 1");
        }
        Ok(())
    }
}

/// Overlays the user's (possibly partial) section onto the serialized
/// defaults, so every key the user does not name keeps its default value.
fn fill_defaults<T: Serialize>(table: &mut toml::Table, key: &str, defaults: &T) -> Result<()> {
    let default_value = defaults_as_toml(defaults);
    let merged = match table.remove(key) {
        Some(user) => overlay(default_value, user),
        None => default_value,
    };
    table.insert(key.to_string(), merged);
    Ok(())
}

/// Serializes a defaults struct to a TOML value via JSON, dropping `None`
/// fields (TOML has no null; serde treats a missing `Option` as `None`).
fn defaults_as_toml<T: Serialize>(defaults: &T) -> toml::Value {
    let json = serde_json::to_value(defaults).expect("default sections serialize");
    json_to_toml(&json).expect("default sections contain no top-level null")
}

fn json_to_toml(json: &serde_json::Value) -> Option<toml::Value> {
    use serde_json::Value as J;
    Some(match json {
        J::Null => return None,
        J::Bool(b) => toml::Value::Boolean(*b),
        J::Number(n) => {
            if let Some(i) = n.as_i64() {
                toml::Value::Integer(i)
            } else {
                toml::Value::Float(n.as_f64().expect("JSON numbers are i64 or f64"))
            }
        }
        J::String(s) => toml::Value::String(s.clone()),
        J::Array(items) => toml::Value::Array(items.iter().filter_map(json_to_toml).collect()),
        J::Object(map) => toml::Value::Table(
            map.iter().filter_map(|(k, v)| Some((k.clone(), json_to_toml(v)?))).collect(),
        ),
    })
}

/// User values win over defaults; tables merge recursively.
fn overlay(default: toml::Value, user: toml::Value) -> toml::Value {
    match (default, user) {
        (toml::Value::Table(mut d), toml::Value::Table(u)) => {
            for (k, user_value) in u {
                let merged = match d.remove(&k) {
                    Some(default_value) => overlay(default_value, user_value),
                    None => user_value,
                };
                d.insert(k, merged);
            }
            toml::Value::Table(d)
        }
        (_, user) => user,
    }
}

/// Parses `section.key=value` and writes the value into the TOML table,
/// creating intermediate tables as needed. The value text is parsed as a
/// TOML value (`trees=200`, `hidden=[64,64]`) and falls back to a string
/// when it does not parse as one (`path=data/desk10.edges`).
fn apply_override(table: &mut toml::Table, setting: &str) -> Result<()> {
    let (path, raw_value) = setting
        .split_once('=')
        .with_context(|| format!("override {setting:?} is not of the form key=value"))?;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        bail!("override key {path:?} has an empty segment");
    }

    let value: toml::Value = match format!("x = {raw_value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("x").expect("key x was just parsed"),
        Err(_) => toml::Value::String(raw_value.to_string()),
    };

    let mut current = table;
    for segment in &segments[..segments.len() - 1] {
        current = current
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .with_context(|| format!("override {path:?}: {segment:?} is not a table"))?;
    }
    current.insert(segments[segments.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_table() -> toml::Table {
        r#"
            [topology]
            source = "file"
            path = "data/desk10.edges"
            [output]
            dir = "runs/x"
        "#
        .parse()
        .unwrap()
    }

    #[test]
    fn overrides_reach_nested_sections() {
        let mut table = minimal_table();
        apply_override(&mut table, "train.rf.trees=7").unwrap();
        apply_override(&mut table, "topology.path=other.edges").unwrap();
        apply_override(&mut table, "dataset.demand_range_mbps=[2.0, 50.0]").unwrap();
        let config = ExperimentConfig::from_table(table).unwrap();
        assert_eq!(config.train.rf.trees, 7);
        assert_eq!(config.dataset.demand_range_mbps, (2.0, 50.0));
        match config.topology {
            TopologySource::File { path } => assert_eq!(path, PathBuf::from("other.edges")),
            other => panic!("unexpected source {other:?}"),
        }
    }

    #[test]
    fn missing_sections_take_defaults() {
        let config = ExperimentConfig::from_table(minimal_table()).unwrap();
        assert_eq!(config.sim, SimConfig::default());
        assert_eq!(config.train.rf.trees, ForestParams::default().trees);
        assert_eq!(config.train.regressor.hidden, vec![400, 400, 400]);
        assert!(!config.preprocess.enabled);
        assert_eq!(config.pipeline.delay_error_threshold, 0.10);
    }

    #[test]
    fn partial_section_keeps_unnamed_defaults() {
        let mut table = minimal_table();
        apply_override(&mut table, "sim.noise_std_fraction=0.05").unwrap();
        let config = ExperimentConfig::from_table(table).unwrap();
        assert_eq!(config.sim.noise_std_fraction, 0.05);
        assert_eq!(config.sim.queueing_base_delay_us, 0.5);
    }

    #[test]
    fn malformed_override_is_rejected() {
        let mut table = toml::Table::new();
        assert!(apply_override(&mut table, "no-equals-sign").is_err());
        assert!(apply_override(&mut table, "a..b=1").is_err());
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let mut table = minimal_table();
        apply_override(&mut table, "dataset.test_fraction=1.5").unwrap();
        assert!(ExperimentConfig::from_table(table).is_err());

        let mut table = minimal_table();
        apply_override(&mut table, "pipeline.delay_error_threshold=0.0").unwrap();
        assert!(ExperimentConfig::from_table(table).is_err());
    }
}
