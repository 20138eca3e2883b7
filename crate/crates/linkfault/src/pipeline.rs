//! Three-stage fault diagnosis over one measured feature vector.
//!
//! Stage 1 classifies the vector as no-fault or a tentative disconnected
//! link (L1). Stage 2 predicts what the all-pairs delays would look like if
//! L1 alone were disconnected and compares against the measured delays via
//! a relative-RMSE threshold: small error means the disconnection story
//! explains the data, large error means a reconnection is also in play.
//! Stage 3 then classifies the (removed, added) pair, which may revise the
//! disconnected link (L2) while L1 is kept for audit.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabelSpace;
use crate::flowsim::FeatureVector;
use crate::learners::{LearnerError, ModelEnvelope, ModelPayload};
use crate::linalg::Matrix;
use crate::topology::{FaultScenario, LinkRef};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("threshold must lie strictly inside (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("stage {stage} model unusable: {problem}")]
    BadStageModel { stage: u8, problem: String },
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

/// Kind of fault the pipeline concluded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultType {
    DisconnectionOnly,
    Reconnection,
}

/// One diagnosis: what happened, where, and how long inference took.
///
/// Field invariants: `fault_detected == false` implies every optional is
/// `None`; `DisconnectionOnly` implies `disconnected == tentative_link` and
/// `reconnected == None`; `Reconnection` implies both `disconnected` and
/// `reconnected` are present. `delay_error` is present exactly when the
/// delay-regression stage ran.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub fault_detected: bool,
    pub fault_type: Option<FaultType>,
    /// Stage-1 candidate link (L1), kept even when stage 3 revises it.
    pub tentative_link: Option<LinkRef>,
    /// Final disconnected link (L2).
    pub disconnected: Option<LinkRef>,
    /// Reconnected link (L3), present only for reconnection faults.
    pub reconnected: Option<LinkRef>,
    /// Relative RMSE between delays predicted under the "only L1 down"
    /// hypothesis and the measured delays.
    pub delay_error: Option<f64>,
    /// Wall-clock time of this call, covering every stage that ran.
    pub inference_time_us: f64,
}

impl Diagnosis {
    /// Checks the cross-field invariants documented on the type.
    pub fn is_consistent(&self) -> bool {
        if !self.fault_detected {
            return self.fault_type.is_none()
                && self.tentative_link.is_none()
                && self.disconnected.is_none()
                && self.reconnected.is_none()
                && self.delay_error.is_none();
        }
        match self.fault_type {
            Some(FaultType::DisconnectionOnly) => {
                self.tentative_link.is_some()
                    && self.disconnected == self.tentative_link
                    && self.reconnected.is_none()
                    && self.delay_error.is_some()
            }
            Some(FaultType::Reconnection) => {
                self.tentative_link.is_some()
                    && self.disconnected.is_some()
                    && self.reconnected.is_some()
                    && self.delay_error.is_some()
            }
            None => false,
        }
    }
}

/// The loaded three-stage diagnoser. Immutable once built; `diagnose` is
/// safe to call from multiple threads.
pub struct Pipeline {
    stage1: ModelEnvelope,
    regressor: ModelEnvelope,
    stage3: Option<ModelEnvelope>,
    threshold: f64,
    node_count: usize,
}

impl Pipeline {
    /// Validates and assembles a pipeline from trained models.
    ///
    /// The regressor is mandatory; stage 3 is optional (without it,
    /// reconnection faults keep L1 as the disconnected link and report no
    /// reconnected link — callers that need L3 must supply the model).
    pub fn new(
        stage1: ModelEnvelope,
        regressor: ModelEnvelope,
        stage3: Option<ModelEnvelope>,
        threshold: f64,
    ) -> Result<Self, PipelineError> {
        if !threshold.is_finite() || threshold <= 0.0 || threshold >= 1.0 {
            return Err(PipelineError::InvalidThreshold(threshold));
        }

        let space = stage1.label_space.as_ref().ok_or_else(|| PipelineError::BadStageModel {
            stage: 1,
            problem: "missing label space".into(),
        })?;
        if !space.classes().contains(&FaultScenario::NoFault) {
            return Err(PipelineError::BadStageModel {
                stage: 1,
                problem: "label space has no no-fault class".into(),
            });
        }
        if matches!(stage1.payload, ModelPayload::MlpRegressor(_)) {
            return Err(PipelineError::BadStageModel {
                stage: 1,
                problem: "expected a classifier, got a regressor".into(),
            });
        }
        if !matches!(regressor.payload, ModelPayload::MlpRegressor(_)) {
            return Err(PipelineError::BadStageModel {
                stage: 2,
                problem: format!("expected a regressor, got a {}", regressor.payload.kind_name()),
            });
        }
        if let Some(stage3) = &stage3 {
            let space = stage3.label_space.as_ref().ok_or_else(|| PipelineError::BadStageModel {
                stage: 3,
                problem: "missing label space".into(),
            })?;
            if space
                .classes()
                .iter()
                .any(|c| !matches!(c, FaultScenario::Reconnection { .. }))
            {
                return Err(PipelineError::BadStageModel {
                    stage: 3,
                    problem: "label space contains non-reconnection classes".into(),
                });
            }
        }

        let fingerprint = &stage1.topology_fingerprint;
        let mut all = vec![&regressor.topology_fingerprint];
        if let Some(stage3) = &stage3 {
            all.push(&stage3.topology_fingerprint);
        }
        if all.iter().any(|fp| *fp != fingerprint) {
            return Err(PipelineError::Learner(LearnerError::FingerprintMismatch));
        }

        let feature_count = stage1.raw_input_dim();
        let node_count = node_count_for_features(feature_count).ok_or_else(|| {
            PipelineError::BadStageModel {
                stage: 1,
                problem: format!(
                    "input width {feature_count} is not 3*v*(v-1) for any node count v"
                ),
            }
        })?;

        Ok(Pipeline { stage1, regressor, stage3, threshold, node_count })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn topology_fingerprint(&self) -> &str {
        &self.stage1.topology_fingerprint
    }

    pub fn stage1_label_space(&self) -> &LabelSpace {
        self.stage1.label_space.as_ref().expect("validated in new")
    }

    pub fn stage3_label_space(&self) -> Option<&LabelSpace> {
        self.stage3.as_ref().and_then(|m| m.label_space.as_ref())
    }

    /// Runs stage 1 alone: `None` means no fault, `Some(link)` is L1.
    pub fn stage1_classify(&self, features: &[f64]) -> Result<Option<LinkRef>, PipelineError> {
        let row = Matrix::from_vec(1, features.len(), features.to_vec());
        let class = self.stage1.predict_classes(&row)?[0];
        Ok(match self.stage1_label_space().class(class) {
            FaultScenario::NoFault => None,
            scenario => scenario.removed(),
        })
    }

    /// Runs stage 2 alone: predicts all-pairs delays under the hypothesis
    /// that only `tentative` is disconnected, returning the relative RMSE
    /// against the measured delays.
    pub fn stage2_delay_error(
        &self,
        features: &[f64],
        tentative: LinkRef,
    ) -> Result<f64, PipelineError> {
        let v = self.node_count;
        let pair_count = v * (v - 1);
        let rates = &features[..pair_count];
        let actual_delays = &features[pair_count..2 * pair_count];

        let input = stage2_input(rates, tentative, v);
        let row = Matrix::from_vec(1, input.len(), input);
        let predicted = self.regressor.predict_values(&row)?;
        Ok(relative_rmse(predicted.row(0), actual_delays))
    }

    /// Runs stage 3 alone: decodes the predicted reconnection class.
    pub fn stage3_localize(&self, features: &[f64]) -> Result<(LinkRef, LinkRef), PipelineError> {
        let stage3 = self.stage3.as_ref().ok_or_else(|| PipelineError::BadStageModel {
            stage: 3,
            problem: "no reconnection model loaded".into(),
        })?;
        let row = Matrix::from_vec(1, features.len(), features.to_vec());
        let class = stage3.predict_classes(&row)?[0];
        match stage3.label_space.as_ref().expect("validated in new").class(class) {
            FaultScenario::Reconnection { removed, added } => Ok((*removed, *added)),
            _ => unreachable!("stage 3 label space validated to hold only reconnections"),
        }
    }

    /// Full three-stage diagnosis of one measured feature vector.
    pub fn diagnose(&self, features: &[f64]) -> Result<Diagnosis, PipelineError> {
        let expected = FeatureVector::feature_count(self.node_count);
        if features.len() != expected {
            return Err(PipelineError::Learner(LearnerError::DimensionMismatch {
                expected,
                got: features.len(),
            }));
        }
        let start = Instant::now();

        let Some(tentative) = self.stage1_classify(features)? else {
            return Ok(Diagnosis {
                fault_detected: false,
                fault_type: None,
                tentative_link: None,
                disconnected: None,
                reconnected: None,
                delay_error: None,
                inference_time_us: elapsed_us(start),
            });
        };

        let delay_error = self.stage2_delay_error(features, tentative)?;
        // Without a stage-3 model a reconnection cannot be localized; the
        // best-supported claim is then the stage-1 disconnection, so the
        // branch below collapses to DisconnectionOnly in that case too.
        if delay_error < self.threshold || self.stage3.is_none() {
            return Ok(Diagnosis {
                fault_detected: true,
                fault_type: Some(FaultType::DisconnectionOnly),
                tentative_link: Some(tentative),
                disconnected: Some(tentative),
                reconnected: None,
                delay_error: Some(delay_error),
                inference_time_us: elapsed_us(start),
            });
        }

        let (disconnected, reconnected) = self.stage3_localize(features)?;
        Ok(Diagnosis {
            fault_detected: true,
            fault_type: Some(FaultType::Reconnection),
            tentative_link: Some(tentative),
            disconnected: Some(disconnected),
            reconnected: Some(reconnected),
            delay_error: Some(delay_error),
            inference_time_us: elapsed_us(start),
        })
    }
}

fn elapsed_us(start: Instant) -> f64 {
    let us = start.elapsed().as_secs_f64() * 1e6;
    // Clock granularity can report 0 on very fast paths; keep "time > 0".
    us.max(1e-3)
}

/// Solves `3 * v * (v - 1) = feature_count` for an integral `v >= 2`.
pub fn node_count_for_features(feature_count: usize) -> Option<usize> {
    if feature_count == 0 || !feature_count.is_multiple_of(3) {
        return None;
    }
    let pairs = feature_count / 3;
    let v = (1.0 + (1.0 + 4.0 * pairs as f64).sqrt()) / 2.0;
    let v = v.round() as usize;
    (v >= 2 && v * (v - 1) == pairs).then_some(v)
}

/// Assembles the delay regressor's input: measured per-pair rates followed
/// by one-hot encodings of the hypothesized link's two endpoints.
pub fn stage2_input(rates: &[f64], link: LinkRef, node_count: usize) -> Vec<f64> {
    let mut input = Vec::with_capacity(rates.len() + 2 * node_count);
    input.extend_from_slice(rates);
    let mut lo = vec![0.0; node_count];
    lo[link.a] = 1.0;
    input.extend_from_slice(&lo);
    let mut hi = vec![0.0; node_count];
    hi[link.b] = 1.0;
    input.extend_from_slice(&hi);
    input
}

/// Root-mean-square prediction error normalized by the root-mean-square
/// actual value; 0 when both sides are identically zero.
pub fn relative_rmse(predicted: &[f64], actual: &[f64]) -> f64 {
    assert_eq!(predicted.len(), actual.len(), "pairwise comparison needs equal lengths");
    assert!(!predicted.is_empty(), "relative RMSE of nothing is undefined");
    let mut err = 0.0;
    let mut base = 0.0;
    for (&p, &a) in predicted.iter().zip(actual) {
        err += (p - a) * (p - a);
        base += a * a;
    }
    if base == 0.0 {
        if err == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (err / base).sqrt()
    }
}
