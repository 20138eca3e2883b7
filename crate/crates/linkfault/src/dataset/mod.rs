//! Labeled dataset generation, stratified splitting, and CSV persistence.

pub mod preprocess;

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flowsim::{apply_noise, measure_noiseless, DemandMatrix, FeatureVector, SimConfig};
use crate::linalg::Matrix;
use crate::rng::{derive_seed, rng_from_seed};
use crate::topology::{
    enumerate_scenarios, FaultScenario, ScenarioKind, Topology, TopologyError,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("label space is empty")]
    EmptyLabelSpace,
    #[error("label space repeats class {0}")]
    DuplicateClass(FaultScenario),
    #[error("class {class} has only {rows} rows; at least 2 required")]
    ClassTooSmall { class: usize, rows: usize },
    #[error("test fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("expected {expected} feature columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("CSV error at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("simulation failed for class {class}: {source}")]
    Simulation {
        class: usize,
        #[source]
        source: TopologyError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered list of scenario classes; a row label is an index into it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    classes: Vec<FaultScenario>,
}

impl LabelSpace {
    pub fn new(classes: Vec<FaultScenario>) -> Result<Self, DatasetError> {
        if classes.is_empty() {
            return Err(DatasetError::EmptyLabelSpace);
        }
        let mut seen = std::collections::HashSet::new();
        for class in &classes {
            if !seen.insert(*class) {
                return Err(DatasetError::DuplicateClass(*class));
            }
        }
        Ok(LabelSpace { classes })
    }

    /// No-fault plus one disconnection class per removable link.
    pub fn stage1(topology: &Topology) -> Self {
        let classes =
            enumerate_scenarios(topology, &[ScenarioKind::NoFault, ScenarioKind::Disconnection], 0);
        LabelSpace { classes }
    }

    /// Disconnection classes only: the regression stage's hypothesis space.
    pub fn disconnections(topology: &Topology) -> Self {
        let classes = enumerate_scenarios(topology, &[ScenarioKind::Disconnection], 0);
        LabelSpace { classes }
    }

    /// One class per (removed, added) reconnection pair.
    pub fn reconnections(topology: &Topology) -> Self {
        let classes = enumerate_scenarios(topology, &[ScenarioKind::Reconnection], 0);
        LabelSpace { classes }
    }

    pub fn classes(&self) -> &[FaultScenario] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class(&self, id: usize) -> &FaultScenario {
        &self.classes[id]
    }

    pub fn index_of(&self, scenario: &FaultScenario) -> Option<usize> {
        self.classes.iter().position(|c| c == scenario)
    }
}

/// A labeled feature matrix tied to the topology it was measured on.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub label_space: LabelSpace,
    pub topology_fingerprint: String,
}

/// Generation knobs: sample counts, demand model, and seeds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetParams {
    pub samples_per_class: usize,
    /// Uniform per-pair demand range, Mbps.
    pub demand_range_mbps: (f64, f64),
    pub demand_seed: u64,
    pub noise_seed: u64,
}

/// Rounds to the 9 significant digits the CSV format carries, so a dataset
/// and its file round-trip bitwise.
pub fn quantize_feature(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("formatted floats always parse")
}

/// Generates `samples_per_class` noisy measurements per scenario.
///
/// One demand matrix is drawn per call and shared by every scenario, so
/// class differences come from the fault, not from demand redraws; per-row
/// variation comes from measurement noise on independent derived seeds.
/// Rows are grouped by class in scenario order. Deterministic.
pub fn generate_dataset(
    topology: &Topology,
    scenarios: &[FaultScenario],
    params: &DatasetParams,
    sim: &SimConfig,
) -> Result<Dataset, DatasetError> {
    let label_space = LabelSpace::new(scenarios.to_vec())?;
    assert!(params.samples_per_class >= 1, "samples_per_class must be at least 1");
    let (lo, hi) = params.demand_range_mbps;
    let demands =
        DemandMatrix::uniform_random(topology.node_count(), lo, hi, derive_seed(params.demand_seed, 0));

    let spc = params.samples_per_class;
    let per_class: Vec<Vec<FeatureVector>> = scenarios
        .par_iter()
        .enumerate()
        .map(|(class, scenario)| {
            let noiseless = measure_noiseless(topology, &demands, scenario, sim)
                .map_err(|source| DatasetError::Simulation { class, source })?;
            let rows = (0..spc)
                .map(|i| {
                    let mut row = noiseless.clone();
                    apply_noise(
                        &mut row,
                        sim.noise_std_fraction,
                        derive_seed(params.noise_seed, (class * spc + i) as u64),
                    );
                    for x in &mut row.features {
                        *x = quantize_feature(*x);
                    }
                    row
                })
                .collect();
            Ok(rows)
        })
        .collect::<Result<_, DatasetError>>()?;

    let cols = FeatureVector::feature_count(topology.node_count());
    let mut features = Matrix::zeros(scenarios.len() * spc, cols);
    let mut labels = Vec::with_capacity(scenarios.len() * spc);
    for (class, rows) in per_class.iter().enumerate() {
        debug_assert_eq!(rows.len(), spc, "class {class} row count");
        for (i, row) in rows.iter().enumerate() {
            features.row_mut(class * spc + i).copy_from_slice(&row.features);
            labels.push(class);
        }
    }
    Ok(Dataset { features, labels, label_space, topology_fingerprint: topology.fingerprint() })
}

impl Dataset {
    pub fn row_count(&self) -> usize {
        self.features.rows
    }

    pub fn feature_count(&self) -> usize {
        self.features.cols
    }

    /// Row indices of one class, in row order.
    pub fn class_rows(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == class).then_some(i))
            .collect()
    }

    /// Stratified split into disjoint train and test sets.
    ///
    /// Per-class test counts follow the largest-remainder method, so they
    /// match the fraction exactly when divisible and deviate by at most one
    /// row otherwise. Row order within each side preserves dataset order.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(DatasetError::BadFraction(test_fraction));
        }
        let k = self.label_space.len();
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &label) in self.labels.iter().enumerate() {
            by_class[label].push(i);
        }
        for (class, rows) in by_class.iter().enumerate() {
            if rows.len() < 2 {
                return Err(DatasetError::ClassTooSmall { class, rows: rows.len() });
            }
        }

        // Largest-remainder apportionment of the total test row count.
        let total_test =
            ((self.row_count() as f64) * test_fraction).round().max(1.0) as usize;
        let exact: Vec<f64> = by_class.iter().map(|r| r.len() as f64 * test_fraction).collect();
        let mut take: Vec<usize> = exact.iter().map(|&e| e.floor() as usize).collect();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| {
            let (ri, rj) = (exact[i] - exact[i].floor(), exact[j] - exact[j].floor());
            rj.partial_cmp(&ri).unwrap().then(i.cmp(&j))
        });
        let mut remaining = total_test.saturating_sub(take.iter().sum());
        for &class in &order {
            if remaining == 0 {
                break;
            }
            if take[class] < by_class[class].len() - 1 {
                take[class] += 1;
                remaining -= 1;
            }
        }
        // Keep at least one training row per class.
        for (class, rows) in by_class.iter().enumerate() {
            take[class] = take[class].min(rows.len() - 1);
        }

        let mut is_test = vec![false; self.row_count()];
        for (class, rows) in by_class.iter().enumerate() {
            use rand::seq::SliceRandom;
            let mut rng = rng_from_seed(derive_seed(seed, class as u64));
            let mut shuffled = rows.clone();
            shuffled.shuffle(&mut rng);
            for &row in shuffled.iter().take(take[class]) {
                is_test[row] = true;
            }
        }

        let train_rows: Vec<usize> = (0..self.row_count()).filter(|&i| !is_test[i]).collect();
        let test_rows: Vec<usize> = (0..self.row_count()).filter(|&i| is_test[i]).collect();
        Ok((self.subset(&train_rows), self.subset(&test_rows)))
    }

    /// Copies the selected rows into a new dataset.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            label_space: self.label_space.clone(),
            topology_fingerprint: self.topology_fingerprint.clone(),
        }
    }

    /// CSV with a `label,f0,f1,...` header and 9-significant-digit features.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("label");
        for c in 0..self.feature_count() {
            out.push_str(&format!(",f{c}"));
        }
        out.push('\n');
        for (i, &label) in self.labels.iter().enumerate() {
            out.push_str(&label.to_string());
            for &x in self.features.row(i) {
                out.push_str(&format!(",{x:.8e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), DatasetError> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Parses a dataset CSV produced by [`Dataset::to_csv`]. The label space
    /// and fingerprint are not stored in the CSV and must be supplied by the
    /// caller (they live in the run manifest).
    pub fn from_csv(
        text: &str,
        label_space: LabelSpace,
        topology_fingerprint: String,
    ) -> Result<Dataset, DatasetError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(DatasetError::Csv { line: 1, message: "empty file".into() })?;
        let mut header_fields = header.split(',');
        if header_fields.next() != Some("label") {
            return Err(DatasetError::Csv { line: 1, message: "header must start with 'label'".into() });
        }
        let cols = header_fields.count();
        if cols == 0 {
            return Err(DatasetError::Csv { line: 1, message: "no feature columns".into() });
        }

        let mut data = Vec::new();
        let mut labels = Vec::new();
        for (lineno, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let label_field =
                fields.next().ok_or(DatasetError::Csv { line: lineno + 1, message: "missing label".into() })?;
            let label: usize = label_field.parse().map_err(|_| DatasetError::Csv {
                line: lineno + 1,
                message: format!("invalid label {label_field:?}"),
            })?;
            if label >= label_space.len() {
                return Err(DatasetError::Csv {
                    line: lineno + 1,
                    message: format!("label {label} outside the {}-class label space", label_space.len()),
                });
            }
            let mut row = Vec::with_capacity(cols);
            for field in fields {
                let x: f64 = field.parse().map_err(|_| DatasetError::Csv {
                    line: lineno + 1,
                    message: format!("invalid feature value {field:?}"),
                })?;
                row.push(x);
            }
            if row.len() != cols {
                return Err(DatasetError::Csv {
                    line: lineno + 1,
                    message: format!("expected {cols} features, got {}", row.len()),
                });
            }
            labels.push(label);
            data.extend_from_slice(&row);
        }
        let rows = labels.len();
        Ok(Dataset {
            features: Matrix::from_vec(rows, cols, data),
            labels,
            label_space,
            topology_fingerprint,
        })
    }

    pub fn read_csv(
        path: &Path,
        label_space: LabelSpace,
        topology_fingerprint: String,
    ) -> Result<Dataset, DatasetError> {
        let text = std::fs::read_to_string(path)?;
        Dataset::from_csv(&text, label_space, topology_fingerprint)
    }

    /// Rows per class id, for balance checks and stratification audits.
    pub fn class_counts(&self) -> HashMap<usize, usize> {
        let mut counts = HashMap::new();
        for &label in &self.labels {
            *counts.entry(label).or_insert(0) += 1;
        }
        counts
    }
}
