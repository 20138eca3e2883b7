//! From-scratch learners — random forest, multilayer perceptron, linear
//! SVM — with a uniform train/predict/serialize contract.
//!
//! Trained models travel in a [`ModelEnvelope`]: a JSON document carrying
//! the model kind, format version, label space, topology fingerprint, and
//! the preprocessor the model was trained behind, so a model file is
//! self-contained and refuses inputs from the wrong topology.

pub mod forest;
pub mod mlp;
pub mod svm;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::preprocess::Preprocessor;
use crate::dataset::LabelSpace;
use crate::linalg::Matrix;

/// Format version stamped into every serialized model.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("targets are constant; nothing to regress")]
    ConstantTarget,
    #[error("expected {expected} input features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model format version {got} unsupported (expected {expected})")]
    VersionMismatch { expected: u32, got: u32 },
    #[error("model file does not match the expected topology fingerprint")]
    FingerprintMismatch,
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    #[error("model is a {got}, expected a {expected}")]
    WrongModelKind { expected: &'static str, got: &'static str },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-epoch training statistics: loss plus a task metric (accuracy for
/// classifiers, validation R-squared for regressors; NaN when unavailable).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStat {
    pub epoch: usize,
    pub loss: f64,
    pub metric: f64,
}

/// Loss/metric curve of one training run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochStat>,
    /// Final metric on the training rows (accuracy or R-squared).
    pub final_train_metric: Option<f64>,
    /// Final metric on held-out validation rows, when a validation split
    /// was configured.
    pub final_val_metric: Option<f64>,
}

impl TrainLog {
    /// Renders the curve as `epoch,loss,metric` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,metric\n");
        for stat in &self.epochs {
            out.push_str(&format!("{},{},{}\n", stat.epoch, stat.loss, stat.metric));
        }
        out
    }
}

/// The serializable model payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelPayload {
    RandomForest(forest::RandomForestModel),
    MlpClassifier(mlp::MlpModel),
    MlpRegressor(mlp::MlpModel),
    Svm(svm::SvmModel),
}

impl ModelPayload {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelPayload::RandomForest(_) => "random-forest",
            ModelPayload::MlpClassifier(_) => "mlp-classifier",
            ModelPayload::MlpRegressor(_) => "mlp-regressor",
            ModelPayload::Svm(_) => "svm",
        }
    }
}

/// Self-contained trained model: payload plus the context needed to apply
/// it safely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEnvelope {
    pub format_version: u32,
    /// Class id to scenario mapping; absent for regressors.
    pub label_space: Option<LabelSpace>,
    pub topology_fingerprint: String,
    /// Preprocessor applied to raw rows before the payload sees them;
    /// absent when the model consumes raw features.
    pub preprocessor: Option<Preprocessor>,
    pub payload: ModelPayload,
}

impl ModelEnvelope {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    /// Parses and version-checks an envelope.
    pub fn from_json(text: &str) -> Result<Self, LearnerError> {
        let envelope: ModelEnvelope =
            serde_json::from_str(text).map_err(|e| LearnerError::CorruptModel(e.to_string()))?;
        if envelope.format_version != MODEL_FORMAT_VERSION {
            return Err(LearnerError::VersionMismatch {
                expected: MODEL_FORMAT_VERSION,
                got: envelope.format_version,
            });
        }
        Ok(envelope)
    }

    pub fn save(&self, path: &Path) -> Result<(), LearnerError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Loads an envelope, optionally insisting on a topology fingerprint.
    pub fn load(path: &Path, expected_fingerprint: Option<&str>) -> Result<Self, LearnerError> {
        let text = std::fs::read_to_string(path)?;
        let envelope = Self::from_json(&text)?;
        if let Some(expected) = expected_fingerprint {
            if envelope.topology_fingerprint != expected {
                return Err(LearnerError::FingerprintMismatch);
            }
        }
        Ok(envelope)
    }

    fn preprocessed(&self, raw_rows: &Matrix) -> Result<Matrix, LearnerError> {
        match &self.preprocessor {
            Some(pre) => pre.transform_rows(raw_rows).map_err(|_| LearnerError::DimensionMismatch {
                expected: pre.input_dim(),
                got: raw_rows.cols,
            }),
            None => Ok(raw_rows.clone()),
        }
    }

    /// Feature count of the raw rows this envelope accepts: the
    /// preprocessor's input width when one is embedded, else the payload's.
    pub fn raw_input_dim(&self) -> usize {
        if let Some(pre) = &self.preprocessor {
            return pre.input_dim();
        }
        match &self.payload {
            ModelPayload::RandomForest(model) => model.feature_count,
            ModelPayload::MlpClassifier(model) | ModelPayload::MlpRegressor(model) => {
                model.input_dim()
            }
            ModelPayload::Svm(model) => model.feature_count(),
        }
    }

    /// Applies the embedded preprocessor (if any) and the classifier payload.
    pub fn predict_classes(&self, raw_rows: &Matrix) -> Result<Vec<usize>, LearnerError> {
        let rows = self.preprocessed(raw_rows)?;
        match &self.payload {
            ModelPayload::RandomForest(model) => model.predict(&rows),
            ModelPayload::MlpClassifier(model) => model.predict_classes(&rows),
            ModelPayload::Svm(model) => model.predict(&rows),
            ModelPayload::MlpRegressor(_) => Err(LearnerError::WrongModelKind {
                expected: "classifier",
                got: self.payload.kind_name(),
            }),
        }
    }

    /// Applies the embedded preprocessor (if any) and the regressor payload.
    pub fn predict_values(&self, raw_rows: &Matrix) -> Result<Matrix, LearnerError> {
        let rows = self.preprocessed(raw_rows)?;
        match &self.payload {
            ModelPayload::MlpRegressor(model) => model.predict_values(&rows),
            other => Err(LearnerError::WrongModelKind {
                expected: "regressor",
                got: other.kind_name(),
            }),
        }
    }
}

/// Checks a feature-count match, the shared precondition of every predict.
pub(crate) fn check_dim(expected: usize, got: usize) -> Result<(), LearnerError> {
    if expected == got {
        Ok(())
    } else {
        Err(LearnerError::DimensionMismatch { expected, got })
    }
}
