//! Multilayer perceptron: ReLU hidden layers, a softmax or linear output
//! head, trained by mini-batch gradient descent with momentum.
//!
//! One implementation serves both the classifier (softmax head,
//! cross-entropy loss) and the regressor (linear head, mean squared error).
//! Inputs are standardized internally; the regressor standardizes its
//! targets too and undoes that at prediction time, so callers always work
//! in raw units. [`MlpModel::loss`] and [`MlpModel::loss_and_gradients`]
//! expose the exact quantities the trainer descends (minus the L2 penalty,
//! which the update step adds), which is what the finite-difference
//! gradient tests check.

use serde::{Deserialize, Serialize};

use super::{check_dim, EpochStat, LearnerError, TrainLog};
use crate::linalg::Matrix;
use crate::metrics::r2_score;
use crate::rng::{derive_seed, rng_from_seed, standard_normal, Prng};

/// Output head: softmax probabilities or raw linear values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Softmax,
    Linear,
}

/// Training configuration shared by classifier and regressor.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    /// L2 penalty on weights (not biases), applied in the update step.
    pub l2: f64,
    pub seed: u64,
    /// Stop after this many epochs without improvement of the monitored
    /// loss (validation loss when a validation split exists, else training
    /// loss), restoring the best weights. 0 disables.
    pub early_stop_patience: usize,
    /// Fraction of rows held out for validation. 0 disables.
    pub validation_fraction: f64,
}

impl MlpParams {
    pub fn classifier_default() -> Self {
        MlpParams {
            hidden: vec![128, 128],
            learning_rate: 0.02,
            epochs: 60,
            batch_size: 32,
            momentum: 0.9,
            l2: 1e-4,
            seed: 0,
            early_stop_patience: 0,
            validation_fraction: 0.0,
        }
    }

    pub fn regressor_default() -> Self {
        MlpParams {
            hidden: vec![400, 400, 400],
            learning_rate: 0.01,
            epochs: 80,
            batch_size: 32,
            momentum: 0.9,
            l2: 0.0,
            seed: 0,
            early_stop_patience: 8,
            validation_fraction: 0.1,
        }
    }
}

/// Weights, biases, and the fitted input/target standardization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// `[input, hidden..., output]`.
    pub layer_sizes: Vec<usize>,
    /// `weights[l]` maps layer `l` (rows) to layer `l + 1` (columns).
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub head: Head,
    pub input_means: Vec<f64>,
    pub input_stds: Vec<f64>,
    /// Empty for classifiers.
    pub target_means: Vec<f64>,
    pub target_stds: Vec<f64>,
}

/// Parameter gradients aligned with [`MlpModel::weights`] / `biases`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Training targets in raw (unstandardized) form.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Classes(&'a [usize]),
    Values(&'a Matrix),
}

impl MlpModel {
    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    fn standardize_input(&self, raw: &Matrix) -> Matrix {
        let mut out = raw.clone();
        for i in 0..out.rows {
            for (c, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.input_means[c]) / self.input_stds[c];
            }
        }
        out
    }

    /// Activations per layer on standardized input: `[a0, ..., aL]` where
    /// hidden activations are post-ReLU and `aL` is the raw output layer
    /// (pre-head).
    fn forward_std(&self, x_std: &Matrix) -> Vec<Matrix> {
        let mut activations = Vec::with_capacity(self.weights.len() + 1);
        activations.push(x_std.clone());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = activations[l].matmul(w);
            add_bias(&mut z, b);
            if l + 1 < self.weights.len() {
                relu(&mut z);
            }
            activations.push(z);
        }
        activations
    }

    /// Head output on raw rows: softmax probabilities for classifiers, raw
    /// target-unit predictions for regressors.
    pub fn forward(&self, raw: &Matrix) -> Result<Matrix, LearnerError> {
        check_dim(self.input_dim(), raw.cols)?;
        let x_std = self.standardize_input(raw);
        let mut out = self.forward_std(&x_std).pop().expect("at least the input activation");
        match self.head {
            Head::Softmax => softmax_rows(&mut out),
            Head::Linear => {
                for i in 0..out.rows {
                    for (c, v) in out.row_mut(i).iter_mut().enumerate() {
                        *v = *v * self.target_stds[c] + self.target_means[c];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Argmax class per row; ties break toward the lowest class id.
    pub fn predict_classes(&self, raw: &Matrix) -> Result<Vec<usize>, LearnerError> {
        let probs = self.forward(raw)?;
        Ok((0..probs.rows).map(|i| argmax(probs.row(i))).collect())
    }

    /// Regression predictions in raw target units.
    pub fn predict_values(&self, raw: &Matrix) -> Result<Matrix, LearnerError> {
        if self.head != Head::Linear {
            return Err(LearnerError::WrongModelKind { expected: "regressor", got: "classifier" });
        }
        self.forward(raw)
    }

    /// Mean data loss on raw inputs/targets: cross-entropy (softmax head)
    /// or mean squared error over all outputs (linear head, standardized
    /// target space). Excludes the L2 penalty.
    pub fn loss(&self, raw: &Matrix, target: Target<'_>) -> Result<f64, LearnerError> {
        check_dim(self.input_dim(), raw.cols)?;
        let x_std = self.standardize_input(raw);
        let out = self.forward_std(&x_std).pop().expect("activations");
        self.output_loss(&out, target)
    }

    fn standardize_targets(&self, raw: &Matrix) -> Matrix {
        let mut t = raw.clone();
        for i in 0..t.rows {
            for (c, v) in t.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.target_means[c]) / self.target_stds[c];
            }
        }
        t
    }

    fn output_loss(&self, out: &Matrix, target: Target<'_>) -> Result<f64, LearnerError> {
        match (self.head, target) {
            (Head::Softmax, Target::Classes(labels)) => {
                assert_eq!(labels.len(), out.rows, "one label per row");
                let mut total = 0.0;
                for (i, &label) in labels.iter().enumerate() {
                    total += log_sum_exp(out.row(i)) - out.get(i, label);
                }
                Ok(total / out.rows as f64)
            }
            (Head::Linear, Target::Values(raw_t)) => {
                assert_eq!(raw_t.rows, out.rows, "one target row per input row");
                check_dim(self.output_dim(), raw_t.cols)?;
                let t_std = self.standardize_targets(raw_t);
                let n = (out.rows * out.cols) as f64;
                let ss: f64 =
                    out.data.iter().zip(&t_std.data).map(|(&p, &t)| (p - t) * (p - t)).sum();
                Ok(ss / n)
            }
            _ => Err(LearnerError::WrongModelKind { expected: "matching head/target", got: "mismatch" }),
        }
    }

    /// Data loss plus its exact gradients with respect to every weight and
    /// bias, by backpropagation.
    pub fn loss_and_gradients(
        &self,
        raw: &Matrix,
        target: Target<'_>,
    ) -> Result<(f64, Gradients), LearnerError> {
        check_dim(self.input_dim(), raw.cols)?;
        let x_std = self.standardize_input(raw);
        let activations = self.forward_std(&x_std);
        let out = activations.last().expect("activations");
        let loss = self.output_loss(out, target)?;
        let batch = out.rows as f64;

        // dLoss/d(output layer), standardized space.
        let mut delta = match (self.head, target) {
            (Head::Softmax, Target::Classes(labels)) => {
                let mut probs = out.clone();
                softmax_rows(&mut probs);
                for (i, &label) in labels.iter().enumerate() {
                    let v = probs.get(i, label);
                    probs.set(i, label, v - 1.0);
                }
                for v in &mut probs.data {
                    *v /= batch;
                }
                probs
            }
            (Head::Linear, Target::Values(raw_t)) => {
                let t_std = self.standardize_targets(raw_t);
                let scale = 2.0 / (out.rows * out.cols) as f64;
                let mut d = out.clone();
                for (v, &t) in d.data.iter_mut().zip(&t_std.data) {
                    *v = (*v - t) * scale;
                }
                d
            }
            _ => unreachable!("output_loss already rejected the mismatch"),
        };

        let layers = self.weights.len();
        let mut grad_w = Vec::with_capacity(layers);
        let mut grad_b = Vec::with_capacity(layers);
        for l in (0..layers).rev() {
            grad_w.push(activations[l].transpose().matmul(&delta));
            grad_b.push(column_sums(&delta));
            if l > 0 {
                let mut next = delta.matmul(&self.weights[l].transpose());
                // ReLU subgradient: zero wherever the activation was zero.
                for (v, &a) in next.data.iter_mut().zip(&activations[l].data) {
                    if a <= 0.0 {
                        *v = 0.0;
                    }
                }
                delta = next;
            }
        }
        grad_w.reverse();
        grad_b.reverse();
        Ok((loss, Gradients { weights: grad_w, biases: grad_b }))
    }
}

/// Trains a softmax-head MLP on integer class labels.
pub fn train_mlp_classifier(
    x: &Matrix,
    y: &[usize],
    params: &MlpParams,
) -> Result<(MlpModel, TrainLog), LearnerError> {
    assert_eq!(x.rows, y.len(), "one label per row");
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
    train(x, TargetOwned::Classes(y.to_vec(), class_count), Head::Softmax, params)
}

/// Trains a linear-head MLP on real-valued target rows.
pub fn train_mlp_regressor(
    x: &Matrix,
    targets: &Matrix,
    params: &MlpParams,
) -> Result<(MlpModel, TrainLog), LearnerError> {
    assert_eq!(x.rows, targets.rows, "one target row per input row");
    let constant = (0..targets.cols).all(|c| {
        let first = targets.get(0, c);
        (1..targets.rows).all(|i| targets.get(i, c) == first)
    });
    if targets.rows == 0 || constant {
        return Err(LearnerError::ConstantTarget);
    }
    train(x, TargetOwned::Values(targets.clone()), Head::Linear, params)
}

enum TargetOwned {
    Classes(Vec<usize>, usize),
    Values(Matrix),
}

/// Best-so-far weights kept by early stopping.
struct Checkpoint {
    monitored: f64,
    epoch: usize,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

impl TargetOwned {
    fn output_dim(&self) -> usize {
        match self {
            TargetOwned::Classes(_, k) => *k,
            TargetOwned::Values(t) => t.cols,
        }
    }

    fn select(&self, rows: &[usize]) -> TargetOwned {
        match self {
            TargetOwned::Classes(y, k) => {
                TargetOwned::Classes(rows.iter().map(|&i| y[i]).collect(), *k)
            }
            TargetOwned::Values(t) => TargetOwned::Values(t.select_rows(rows)),
        }
    }

    fn as_target(&self) -> Target<'_> {
        match self {
            TargetOwned::Classes(y, _) => Target::Classes(y),
            TargetOwned::Values(t) => Target::Values(t),
        }
    }
}

fn train(
    x: &Matrix,
    target: TargetOwned,
    head: Head,
    params: &MlpParams,
) -> Result<(MlpModel, TrainLog), LearnerError> {
    assert!(params.batch_size >= 1 && params.epochs >= 1, "degenerate training schedule");
    let n = x.rows;
    assert!(n >= 1, "cannot train on an empty matrix");

    // Input standardization, fitted on all training rows.
    let (input_means, input_stds) = column_moments(x);
    // Target standardization for the regressor; identity for classifiers.
    let (target_means, target_stds) = match &target {
        TargetOwned::Values(t) => column_moments(t),
        TargetOwned::Classes(..) => (Vec::new(), Vec::new()),
    };

    let mut layer_sizes = vec![x.cols];
    layer_sizes.extend_from_slice(&params.hidden);
    layer_sizes.push(target.output_dim());

    let mut init_rng = rng_from_seed(derive_seed(params.seed, 0));
    let mut model = MlpModel {
        weights: init_weights(&layer_sizes, &mut init_rng),
        biases: layer_sizes[1..].iter().map(|&s| vec![0.0; s]).collect(),
        layer_sizes,
        head,
        input_means,
        input_stds,
        target_means,
        target_stds,
    };

    // Validation split on shuffled row indices.
    let mut indices: Vec<usize> = (0..n).collect();
    let val_count = if params.validation_fraction > 0.0 && n >= 2 {
        use rand::seq::SliceRandom;
        let mut rng = rng_from_seed(derive_seed(params.seed, 1));
        indices.shuffle(&mut rng);
        ((n as f64 * params.validation_fraction) as usize).clamp(1, n - 1)
    } else {
        0
    };
    let (val_indices, train_indices) = indices.split_at(val_count);
    let mut train_indices = train_indices.to_vec();
    let x_val = x.select_rows(val_indices);
    let t_val = target.select(val_indices);

    let mut velocity_w: Vec<Matrix> =
        model.weights.iter().map(|w| Matrix::zeros(w.rows, w.cols)).collect();
    let mut velocity_b: Vec<Vec<f64>> = model.biases.iter().map(|b| vec![0.0; b.len()]).collect();

    let mut shuffle_rng = rng_from_seed(derive_seed(params.seed, 2));
    let mut log = TrainLog::default();
    let mut best: Option<Checkpoint> = None;

    for epoch in 0..params.epochs {
        use rand::seq::SliceRandom;
        train_indices.shuffle(&mut shuffle_rng);

        let mut loss_sum = 0.0;
        let mut metric_hits = 0usize;
        for chunk in train_indices.chunks(params.batch_size) {
            let xb = x.select_rows(chunk);
            let tb = target.select(chunk);
            let (loss, grads) = model.loss_and_gradients(&xb, tb.as_target())?;
            if !loss.is_finite() {
                return Err(LearnerError::Diverged { epoch });
            }
            loss_sum += loss * chunk.len() as f64;

            if let TargetOwned::Classes(labels, _) = &tb {
                // Running training accuracy, measured before the update.
                let probs = model.forward(&xb)?;
                for (i, &label) in labels.iter().enumerate() {
                    if argmax(probs.row(i)) == label {
                        metric_hits += 1;
                    }
                }
            }

            for l in 0..model.weights.len() {
                let w = &mut model.weights[l];
                let v = &mut velocity_w[l];
                for ((vi, wi), gi) in v.data.iter_mut().zip(&mut w.data).zip(&grads.weights[l].data)
                {
                    *vi = params.momentum * *vi - params.learning_rate * (gi + params.l2 * *wi);
                    *wi += *vi;
                }
                let vb = &mut velocity_b[l];
                for ((vi, bi), gi) in
                    vb.iter_mut().zip(&mut model.biases[l]).zip(&grads.biases[l])
                {
                    *vi = params.momentum * *vi - params.learning_rate * gi;
                    *bi += *vi;
                }
            }
        }
        let train_loss = loss_sum / train_indices.len() as f64;

        let (monitored, metric) = if val_count > 0 {
            let val_loss = model.loss(&x_val, t_val.as_target())?;
            let metric = match (&t_val, head) {
                (TargetOwned::Values(tv), Head::Linear) => {
                    let pred = model.predict_values(&x_val)?;
                    r2_score(&pred.data, &tv.data).unwrap_or(f64::NAN)
                }
                _ => metric_hits as f64 / train_indices.len() as f64,
            };
            (val_loss, metric)
        } else {
            let metric = match head {
                Head::Softmax => metric_hits as f64 / train_indices.len() as f64,
                Head::Linear => f64::NAN,
            };
            (train_loss, metric)
        };
        log.epochs.push(EpochStat { epoch, loss: train_loss, metric });

        if params.early_stop_patience > 0 {
            let improved = best.as_ref().is_none_or(|b| monitored < b.monitored);
            if improved {
                best = Some(Checkpoint {
                    monitored,
                    epoch,
                    weights: model.weights.clone(),
                    biases: model.biases.clone(),
                });
            } else if let Some(b) = &best {
                if epoch - b.epoch >= params.early_stop_patience {
                    break;
                }
            }
        }
    }

    if let Some(b) = best {
        model.weights = b.weights;
        model.biases = b.biases;
    }

    // Final metrics on the full training split (and validation if present).
    let x_train = x.select_rows(&train_indices);
    let t_train = target.select(&train_indices);
    log.final_train_metric = Some(final_metric(&model, &x_train, &t_train)?);
    if val_count > 0 {
        log.final_val_metric = Some(final_metric(&model, &x_val, &t_val)?);
    }
    Ok((model, log))
}

fn final_metric(model: &MlpModel, x: &Matrix, target: &TargetOwned) -> Result<f64, LearnerError> {
    match target {
        TargetOwned::Classes(labels, _) => {
            let predicted = model.predict_classes(x)?;
            let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
            Ok(hits as f64 / labels.len().max(1) as f64)
        }
        TargetOwned::Values(t) => {
            let predicted = model.predict_values(x)?;
            Ok(r2_score(&predicted.data, &t.data).unwrap_or(f64::NAN))
        }
    }
}

/// He-initialized weight matrices for the given layer sizes.
fn init_weights(layer_sizes: &[usize], rng: &mut Prng) -> Vec<Matrix> {
    layer_sizes
        .windows(2)
        .map(|pair| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let scale = (2.0 / fan_in as f64).sqrt();
            let mut w = Matrix::zeros(fan_in, fan_out);
            for v in &mut w.data {
                *v = scale * standard_normal(rng);
            }
            w
        })
        .collect()
}

/// Per-column mean and standard deviation (population); zero spread maps to
/// scale 1 so standardization stays total.
pub(crate) fn column_moments(m: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.rows.max(1) as f64;
    let mut means = vec![0.0; m.cols];
    for i in 0..m.rows {
        for (mean, &v) in means.iter_mut().zip(m.row(i)) {
            *mean += v;
        }
    }
    for mean in &mut means {
        *mean /= n;
    }
    let mut vars = vec![0.0; m.cols];
    for i in 0..m.rows {
        for ((var, &mean), &v) in vars.iter_mut().zip(&means).zip(m.row(i)) {
            *var += (v - mean) * (v - mean);
        }
    }
    let stds = vars
        .into_iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (means, stds)
}

fn add_bias(m: &mut Matrix, bias: &[f64]) {
    for i in 0..m.rows {
        for (v, &b) in m.row_mut(i).iter_mut().zip(bias) {
            *v += b;
        }
    }
}

fn relu(m: &mut Matrix) {
    for v in &mut m.data {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// In-place row-wise softmax with max-subtraction for stability.
fn softmax_rows(m: &mut Matrix) {
    for i in 0..m.rows {
        let row = m.row_mut(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// Index of the largest value; ties break toward the lowest index.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn column_sums(m: &Matrix) -> Vec<f64> {
    let mut sums = vec![0.0; m.cols];
    for i in 0..m.rows {
        for (s, &v) in sums.iter_mut().zip(m.row(i)) {
            *s += v;
        }
    }
    sums
}
