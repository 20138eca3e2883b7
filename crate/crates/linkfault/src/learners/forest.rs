//! Random forest: bootstrap-sampled CART trees voting by mode.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeParams};
use super::{check_dim, LearnerError};
use crate::linalg::Matrix;
use crate::rng::{derive_seed, rng_from_seed};

/// Forest shape and sampling configuration.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(F))`.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_depth: 20,
            min_samples_leaf: 1,
            features_per_split: None,
            seed: 0,
        }
    }
}

/// A trained forest; prediction is the mode of the tree votes with ties
/// broken toward the lowest class id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub trees: Vec<DecisionTree>,
    pub class_count: usize,
    pub feature_count: usize,
}

/// Trains a random forest. Each tree draws its own bootstrap sample and
/// feature subsets from a stream derived from `params.seed` and the tree
/// index, so training is deterministic and trees are independent (and may
/// be grown in parallel).
pub fn train_rf(x: &Matrix, y: &[usize], params: &ForestParams) -> Result<RandomForestModel, LearnerError> {
    assert_eq!(x.rows, y.len(), "one label per row");
    assert!(params.trees >= 1, "a forest needs at least one tree");
    let class_count = y.iter().max().map_or(0, |&m| m + 1);
    {
        let mut seen = vec![false; class_count];
        for &label in y {
            seen[label] = true;
        }
        if seen.iter().filter(|&&s| s).count() < 2 {
            return Err(LearnerError::SingleClass);
        }
    }
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        features_per_split: params
            .features_per_split
            .unwrap_or_else(|| (x.cols as f64).sqrt().ceil() as usize)
            .clamp(1, x.cols),
    };

    let trees: Vec<DecisionTree> = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            use rand::Rng;
            let mut rng = rng_from_seed(derive_seed(params.seed, t as u64));
            let bootstrap: Vec<usize> = (0..x.rows).map(|_| rng.gen_range(0..x.rows)).collect();
            DecisionTree::fit(x, y, &bootstrap, class_count, &tree_params, &mut rng)
        })
        .collect();

    Ok(RandomForestModel { trees, class_count, feature_count: x.cols })
}

impl RandomForestModel {
    /// Mode of the per-tree votes; ties break toward the lowest class id.
    pub fn predict_row(&self, row: &[f64]) -> Result<usize, LearnerError> {
        check_dim(self.feature_count, row.len())?;
        let mut votes = vec![0u32; self.class_count];
        for tree in &self.trees {
            votes[tree.predict_row(row)] += 1;
        }
        let mut best = 0;
        for (class, &count) in votes.iter().enumerate() {
            if count > votes[best] {
                best = class;
            }
        }
        Ok(best)
    }

    pub fn predict(&self, rows: &Matrix) -> Result<Vec<usize>, LearnerError> {
        (0..rows.rows).map(|i| self.predict_row(rows.row(i))).collect()
    }
}
