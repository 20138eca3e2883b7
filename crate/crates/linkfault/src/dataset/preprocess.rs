//! Feature preprocessing: per-column normalization followed by a PCA
//! projection, fitted on training data only.

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError};
use crate::linalg::{symmetric_eigen, Matrix};

/// Per-column normalization scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Subtract the column mean, divide by the column standard deviation.
    ZScore,
    /// Subtract the column minimum, divide by the column range.
    MinMax,
}

/// Fit options.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PreprocessParams {
    pub normalization: Normalization,
    /// Keep the smallest component count whose cumulative explained
    /// variance reaches this fraction.
    pub variance_to_retain: f64,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        PreprocessParams { normalization: Normalization::ZScore, variance_to_retain: 0.99 }
    }
}

/// Fitted normalization and PCA basis.
///
/// `means`/`stds` hold the column centers and scales: mean and standard
/// deviation under z-score, minimum and range under min-max. Columns with
/// zero spread get scale 1 so the transform stays total. `components` holds
/// the retained principal axes as rows, orthonormal, ordered by decreasing
/// explained variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub normalization: Normalization,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub components: Matrix,
    /// Eigenvalues of the normalized covariance, all of them, descending.
    pub explained_variance: Vec<f64>,
    /// `explained_variance` as fractions of the total.
    pub explained_variance_ratio: Vec<f64>,
    pub retained: usize,
    pub topology_fingerprint: String,
}

/// Fits normalization and PCA on the training rows only.
///
/// The covariance eigenproblem is solved directly when features fit, or via
/// the Gram matrix when there are fewer rows than features (the nonzero
/// spectra coincide and the eigenvectors map back through the data matrix).
pub fn fit_preprocessor(
    train: &Dataset,
    params: &PreprocessParams,
) -> Result<Preprocessor, DatasetError> {
    let x = &train.features;
    let (n, f) = (x.rows, x.cols);
    assert!(n > 0, "cannot fit a preprocessor on an empty dataset");
    assert!(
        params.variance_to_retain > 0.0 && params.variance_to_retain <= 1.0,
        "variance_to_retain must lie in (0, 1]"
    );

    let (means, stds) = match params.normalization {
        Normalization::ZScore => {
            let mut means = vec![0.0; f];
            for i in 0..n {
                for (m, &v) in means.iter_mut().zip(x.row(i)) {
                    *m += v;
                }
            }
            for m in &mut means {
                *m /= n as f64;
            }
            let mut vars = vec![0.0; f];
            for i in 0..n {
                for ((var, &m), &v) in vars.iter_mut().zip(&means).zip(x.row(i)) {
                    *var += (v - m) * (v - m);
                }
            }
            let stds: Vec<f64> = vars
                .iter()
                .map(|&v| {
                    let s = (v / n as f64).sqrt();
                    if s > 0.0 {
                        s
                    } else {
                        1.0 // zero-variance column: pass through unscaled
                    }
                })
                .collect();
            (means, stds)
        }
        Normalization::MinMax => {
            let mut mins = x.row(0).to_vec();
            let mut maxs = x.row(0).to_vec();
            for i in 1..n {
                for ((lo, hi), &v) in mins.iter_mut().zip(&mut maxs).zip(x.row(i)) {
                    *lo = lo.min(v);
                    *hi = hi.max(v);
                }
            }
            let ranges: Vec<f64> =
                mins.iter().zip(&maxs).map(|(lo, hi)| if hi > lo { hi - lo } else { 1.0 }).collect();
            (mins, ranges)
        }
    };

    let mut z = Matrix::zeros(n, f);
    for i in 0..n {
        for (c, ((&v, &m), &s)) in x.row(i).iter().zip(&means).zip(&stds).enumerate() {
            z.set(i, c, (v - m) / s);
        }
    }

    let denom = (n.max(2) - 1) as f64;
    let (eigenvalues, axes) = if f <= n {
        let cov = scaled_gram(&z, denom);
        symmetric_eigen(&cov)
    } else {
        // Gram trick: eigenvectors v of Z Z^T / (n-1) map to feature-space
        // axes Z^T v / sqrt(lambda (n-1)), sharing the nonzero spectrum.
        let gram = scaled_gram(&z.transpose(), denom);
        let (values, vectors) = symmetric_eigen(&gram);
        let zt = z.transpose();
        let mut axes = Matrix::zeros(n, f);
        for (r, &lambda) in values.iter().enumerate() {
            if lambda <= 1e-12 {
                continue;
            }
            let v = vectors.row(r);
            let scale = 1.0 / (lambda * denom).sqrt();
            let axis = axes.row_mut(r);
            for (c, out) in axis.iter_mut().enumerate() {
                *out = zt.row(c).iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * scale;
            }
        }
        (values, axes)
    };

    let clamped: Vec<f64> = eigenvalues.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    let ratios: Vec<f64> = if total > 0.0 {
        clamped.iter().map(|&v| v / total).collect()
    } else {
        vec![0.0; clamped.len()]
    };

    let available = clamped.iter().filter(|&&v| v > 1e-12).count().max(1).min(axes.rows);
    let mut retained = available;
    let mut cumulative = 0.0;
    for (i, &r) in ratios.iter().take(available).enumerate() {
        cumulative += r;
        if cumulative >= params.variance_to_retain - 1e-12 {
            retained = i + 1;
            break;
        }
    }

    let mut components = Matrix::zeros(retained, f);
    for r in 0..retained {
        components.row_mut(r).copy_from_slice(axes.row(r));
    }

    Ok(Preprocessor {
        normalization: params.normalization,
        means,
        stds,
        components,
        explained_variance: clamped,
        explained_variance_ratio: ratios,
        retained,
        topology_fingerprint: train.topology_fingerprint.clone(),
    })
}

/// `m^T m / denom`: the scaled Gram matrix of `m`'s columns.
fn scaled_gram(m: &Matrix, denom: f64) -> Matrix {
    let mt = m.transpose();
    let mut g = mt.matmul(m);
    for v in &mut g.data {
        *v /= denom;
    }
    g
}

impl Preprocessor {
    pub fn input_dim(&self) -> usize {
        self.means.len()
    }

    pub fn output_dim(&self) -> usize {
        self.retained
    }

    /// Normalizes and projects rows onto the retained components.
    pub fn transform_rows(&self, rows: &Matrix) -> Result<Matrix, DatasetError> {
        if rows.cols != self.input_dim() {
            return Err(DatasetError::DimensionMismatch {
                expected: self.input_dim(),
                got: rows.cols,
            });
        }
        let mut out = Matrix::zeros(rows.rows, self.retained);
        let mut normalized = vec![0.0; rows.cols];
        for i in 0..rows.rows {
            for (c, ((&v, &m), &s)) in rows.row(i).iter().zip(&self.means).zip(&self.stds).enumerate() {
                normalized[c] = (v - m) / s;
            }
            for (r, slot) in out.row_mut(i).iter_mut().enumerate() {
                *slot =
                    self.components.row(r).iter().zip(&normalized).map(|(a, b)| a * b).sum();
            }
        }
        Ok(out)
    }

    /// Transforms a dataset, keeping labels and provenance.
    pub fn transform_dataset(&self, dataset: &Dataset) -> Result<Dataset, DatasetError> {
        Ok(Dataset {
            features: self.transform_rows(&dataset.features)?,
            labels: dataset.labels.clone(),
            label_space: dataset.label_space.clone(),
            topology_fingerprint: dataset.topology_fingerprint.clone(),
        })
    }

    /// Maps projected rows back to the original feature space. Lossy
    /// outside the retained subspace.
    pub fn inverse_transform(&self, projected: &Matrix) -> Result<Matrix, DatasetError> {
        if projected.cols != self.retained {
            return Err(DatasetError::DimensionMismatch {
                expected: self.retained,
                got: projected.cols,
            });
        }
        let mut out = projected.matmul(&self.components);
        for i in 0..out.rows {
            for (c, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = *v * self.stds[c] + self.means[c];
            }
        }
        Ok(out)
    }
}
