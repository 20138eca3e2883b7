//! CART decision tree with Gini impurity, array-encoded nodes, and a
//! random feature subset per split (the random-forest building block).

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::rng::Prng;

/// One node; children reference positions in the tree's node array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node")]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// Sparse class histogram of the training rows that reached the leaf:
    /// `(class, count)` sorted by class id.
    Leaf { counts: Vec<(usize, u32)> },
}

/// Growth limits and split sampling for one tree.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Candidate features examined per split.
    pub features_per_split: usize,
}

/// Array-encoded binary decision tree; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub class_count: usize,
}

impl DecisionTree {
    /// Grows a tree on the given rows. Splits minimize weighted Gini
    /// impurity over `features_per_split` features sampled without
    /// replacement from the provided RNG; recursion stops on purity, depth,
    /// or the minimum leaf size.
    pub fn fit(
        x: &Matrix,
        y: &[usize],
        rows: &[usize],
        class_count: usize,
        params: &TreeParams,
        rng: &mut Prng,
    ) -> DecisionTree {
        assert_eq!(x.rows, y.len(), "one label per row");
        assert!(!rows.is_empty(), "cannot grow a tree on zero rows");
        let mut tree = DecisionTree { nodes: Vec::new(), class_count };
        let mut rows = rows.to_vec();
        tree.grow(x, y, &mut rows, 0, params, rng);
        tree
    }

    /// Recursively grows the subtree over `rows`, returning its root index.
    fn grow(
        &mut self,
        x: &Matrix,
        y: &[usize],
        rows: &mut [usize],
        depth: usize,
        params: &TreeParams,
        rng: &mut Prng,
    ) -> usize {
        let counts = class_counts(y, rows, self.class_count);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let can_split = rows.len() >= 2 * params.min_samples_leaf.max(1) && depth < params.max_depth;

        let split = if pure || !can_split {
            None
        } else {
            best_split(x, y, rows, self.class_count, params, rng)
        };

        match split {
            None => {
                let sparse: Vec<(usize, u32)> = counts
                    .iter()
                    .enumerate()
                    .filter_map(|(class, &count)| (count > 0).then_some((class, count)))
                    .collect();
                self.nodes.push(TreeNode::Leaf { counts: sparse });
                self.nodes.len() - 1
            }
            Some((feature, threshold)) => {
                // Partition in place: left side takes values <= threshold.
                let mut mid = 0;
                for i in 0..rows.len() {
                    if x.get(rows[i], feature) <= threshold {
                        rows.swap(i, mid);
                        mid += 1;
                    }
                }
                debug_assert!(mid > 0 && mid < rows.len(), "split must separate rows");
                let node = self.nodes.len();
                self.nodes.push(TreeNode::Split { feature, threshold, left: 0, right: 0 });
                let (left_rows, right_rows) = rows.split_at_mut(mid);
                let left = self.grow(x, y, left_rows, depth + 1, params, rng);
                let right = self.grow(x, y, right_rows, depth + 1, params, rng);
                if let TreeNode::Split { left: l, right: r, .. } = &mut self.nodes[node] {
                    *l = left;
                    *r = right;
                }
                node
            }
        }
    }

    /// Majority class of the leaf the row lands in; ties break toward the
    /// lowest class id.
    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if row[*feature] <= *threshold { *left } else { *right };
                }
                TreeNode::Leaf { counts } => {
                    let mut best = (0usize, 0u32);
                    for &(class, count) in counts {
                        if count > best.1 {
                            best = (class, count);
                        }
                    }
                    return best.0;
                }
            }
        }
    }
}

fn class_counts(y: &[usize], rows: &[usize], class_count: usize) -> Vec<u32> {
    let mut counts = vec![0u32; class_count];
    for &row in rows {
        counts[y[row]] += 1;
    }
    counts
}

fn gini(counts: &[u32], total: f64) -> f64 {
    let sum_sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    1.0 - sum_sq / (total * total)
}

/// Finds the impurity-minimizing `(feature, threshold)` over a random
/// feature subset, or `None` when no split with positive gain respects the
/// minimum leaf size. Thresholds sit halfway between adjacent distinct
/// values; rows with `value <= threshold` go left.
fn best_split(
    x: &Matrix,
    y: &[usize],
    rows: &[usize],
    class_count: usize,
    params: &TreeParams,
    rng: &mut Prng,
) -> Option<(usize, f64)> {
    let n = rows.len() as f64;
    let parent_counts = class_counts(y, rows, class_count);
    let parent_gini = gini(&parent_counts, n);
    let min_leaf = params.min_samples_leaf.max(1);

    let features = sample_features(x.cols, params.features_per_split, rng);
    let mut best: Option<(f64, usize, f64)> = None;

    let mut order: Vec<usize> = rows.to_vec();
    let mut left_counts = vec![0u32; class_count];
    for feature in features {
        order.sort_by(|&a, &b| {
            x.get(a, feature).partial_cmp(&x.get(b, feature)).expect("feature values are finite")
        });
        left_counts.iter_mut().for_each(|c| *c = 0);
        let mut right_counts = parent_counts.clone();
        for cut in 1..order.len() {
            let moved = y[order[cut - 1]];
            left_counts[moved] += 1;
            right_counts[moved] -= 1;
            let lo = x.get(order[cut - 1], feature);
            let hi = x.get(order[cut], feature);
            if lo == hi || cut < min_leaf || order.len() - cut < min_leaf {
                continue;
            }
            let nl = cut as f64;
            let nr = n - nl;
            let weighted =
                nl / n * gini(&left_counts, nl) + nr / n * gini(&right_counts, nr);
            let gain = parent_gini - weighted;
            if gain > 1e-12 {
                let threshold = lo + (hi - lo) / 2.0;
                // A midpoint can collapse onto `hi` in floating point; such
                // a split would send everything left, so skip it.
                if threshold >= hi {
                    continue;
                }
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, feature, threshold));
                }
            }
        }
    }
    best.map(|(_, feature, threshold)| (feature, threshold))
}

/// Samples `count` distinct feature indices by partial Fisher-Yates.
fn sample_features(total: usize, count: usize, rng: &mut Prng) -> Vec<usize> {
    use rand::Rng;
    let count = count.clamp(1, total);
    let mut pool: Vec<usize> = (0..total).collect();
    for i in 0..count {
        let j = rng.gen_range(i..total);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}
