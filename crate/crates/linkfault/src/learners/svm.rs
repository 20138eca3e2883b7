//! Linear support-vector classifier: one-vs-rest hinge loss with L2
//! regularization, trained by stochastic subgradient descent.
//!
//! Each class gets a linear scorer `w·x + b` trained to separate it from
//! the rest; prediction takes the argmax score. Inputs are standardized
//! internally so the shared learning rate behaves across features with
//! very different scales.

use serde::{Deserialize, Serialize};

use super::{check_dim, EpochStat, LearnerError, TrainLog};
use crate::linalg::Matrix;
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SvmParams {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty on weights (not biases).
    pub l2: f64,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { learning_rate: 0.01, epochs: 40, l2: 1e-4, seed: 0 }
    }
}

/// One-vs-rest linear scorers plus the fitted input standardization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// `class_count x feature_count`; row `c` scores class `c`.
    pub weights: Matrix,
    pub biases: Vec<f64>,
    pub input_means: Vec<f64>,
    pub input_stds: Vec<f64>,
}

impl SvmModel {
    pub fn class_count(&self) -> usize {
        self.weights.rows
    }

    pub fn feature_count(&self) -> usize {
        self.weights.cols
    }

    /// Raw decision scores, one row per input row, one column per class.
    pub fn decision_values(&self, raw: &Matrix) -> Result<Matrix, LearnerError> {
        check_dim(self.feature_count(), raw.cols)?;
        let mut scores = Matrix::zeros(raw.rows, self.class_count());
        let mut x_std = vec![0.0; self.feature_count()];
        for i in 0..raw.rows {
            for ((s, &v), (&mean, &std)) in
                x_std.iter_mut().zip(raw.row(i)).zip(self.input_means.iter().zip(&self.input_stds))
            {
                *s = (v - mean) / std;
            }
            for c in 0..self.class_count() {
                let w = self.weights.row(c);
                let dot: f64 = w.iter().zip(&x_std).map(|(&wi, &xi)| wi * xi).sum();
                scores.set(i, c, dot + self.biases[c]);
            }
        }
        Ok(scores)
    }

    /// Argmax-score class per row; ties break toward the lowest class id.
    pub fn predict(&self, raw: &Matrix) -> Result<Vec<usize>, LearnerError> {
        let scores = self.decision_values(raw)?;
        Ok((0..scores.rows).map(|i| super::mlp::argmax(scores.row(i))).collect())
    }
}

/// Trains a one-vs-rest linear SVM on integer class labels.
pub fn train_svm(
    x: &Matrix,
    y: &[usize],
    params: &SvmParams,
) -> Result<(SvmModel, TrainLog), LearnerError> {
    assert_eq!(x.rows, y.len(), "one label per row");
    let n = x.rows;
    let class_count = y.iter().max().map_or(0, |&m| m + 1);
    let distinct = {
        let mut seen = vec![false; class_count];
        for &label in y {
            seen[label] = true;
        }
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return Err(LearnerError::SingleClass);
    }

    let (input_means, input_stds) = super::mlp::column_moments(x);
    let mut x_std = x.clone();
    for i in 0..x_std.rows {
        for (c, v) in x_std.row_mut(i).iter_mut().enumerate() {
            *v = (*v - input_means[c]) / input_stds[c];
        }
    }

    let mut model = SvmModel {
        weights: Matrix::zeros(class_count, x.cols),
        biases: vec![0.0; class_count],
        input_means,
        input_stds,
    };

    let mut rng = rng_from_seed(derive_seed(params.seed, 0));
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = TrainLog::default();

    for epoch in 0..params.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);

        let mut hinge_sum = 0.0;
        for &i in &order {
            let xi = x_std.row(i).to_vec();
            for c in 0..class_count {
                let sign = if y[i] == c { 1.0 } else { -1.0 };
                let score: f64 = {
                    let w = model.weights.row(c);
                    w.iter().zip(&xi).map(|(&wi, &v)| wi * v).sum::<f64>() + model.biases[c]
                };
                let margin = sign * score;
                hinge_sum += (1.0 - margin).max(0.0);
                // Subgradient step on hinge + (l2/2)|w|^2.
                let w = model.weights.row_mut(c);
                if margin < 1.0 {
                    for (wi, &v) in w.iter_mut().zip(&xi) {
                        *wi -= params.learning_rate * (params.l2 * *wi - sign * v);
                    }
                    model.biases[c] += params.learning_rate * sign;
                } else {
                    for wi in w.iter_mut() {
                        *wi -= params.learning_rate * params.l2 * *wi;
                    }
                }
            }
        }
        let loss = hinge_sum / (n * class_count) as f64;
        if !loss.is_finite() {
            return Err(LearnerError::Diverged { epoch });
        }

        let mut hits = 0usize;
        for (i, &label) in y.iter().enumerate() {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for c in 0..class_count {
                let w = model.weights.row(c);
                let score: f64 =
                    w.iter().zip(x_std.row(i)).map(|(&wi, &v)| wi * v).sum::<f64>() + model.biases[c];
                if score > best_score {
                    best_score = score;
                    best = c;
                }
            }
            if best == label {
                hits += 1;
            }
        }
        log.epochs.push(EpochStat { epoch, loss, metric: hits as f64 / n as f64 });
    }

    log.final_train_metric = log.epochs.last().map(|e| e.metric);
    Ok((model, log))
}
