//! CART classification trees grown greedily by Gini impurity reduction.
//!
//! A node splits whenever it is impure, within the depth budget, and some
//! (feature, threshold) candidate leaves at least `min_leaf` rows on each
//! side. Among candidates the split maximizing the impurity reduction
//! wins; ties resolve to the lower feature index, then the lower
//! threshold. Zero-reduction splits are accepted on impure nodes, which is
//! what lets the tree work through XOR-like interactions whose first
//! split alone looks worthless.
//!
//! Leaves store the positive-class fraction minus one half, so the
//! decision score is negative in majority-negative leaves and exactly
//! zero in perfectly mixed ones (ties classify as negative).

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Algorithm, ClassifierModel, ModelParams, TreeNode};
use crate::matrix::RowRef;
use crate::resample::LabeledMatrix;
use crate::{Error, Result};

/// Hyperparameters for a single classification tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    /// Minimum number of training rows in each child of a split.
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 12,
            min_leaf: 1,
        }
    }
}

/// How a node chooses which features to scan for split candidates.
pub(super) enum FeaturePicker<'r> {
    /// Every feature, in ascending index order.
    AllFeatures,
    /// A fresh random subset per node, scanned in ascending index order.
    Sampled { rng: &'r mut ChaCha8Rng, count: usize },
}

pub(super) struct GrowContext<'a> {
    pub rows: &'a [&'a [f64]],
    /// 1 for positive rows, 0 for negative.
    pub labels: &'a [u8],
    pub dim: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

/// Borrow every row of a dense matrix; sparse input is refused.
pub(super) fn dense_rows(train: &LabeledMatrix) -> Result<Vec<&[f64]>> {
    (0..train.len())
        .map(|i| match train.features.row(i) {
            RowRef::Dense(values) => Ok(values),
            RowRef::Sparse(_) => Err(Error::InvalidInput(
                "tree models require dense features".into(),
            )),
        })
        .collect()
}

pub(super) fn binary_labels(train: &LabeledMatrix) -> Vec<u8> {
    train.labels.iter().map(|l| u8::from(l.is_positive())).collect()
}

fn gini_from_counts(positives: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = positives / total;
    2.0 * p * (1.0 - p)
}

pub(super) fn grow(
    ctx: &GrowContext<'_>,
    indices: &[usize],
    depth: usize,
    picker: &mut FeaturePicker<'_>,
) -> TreeNode {
    let n = indices.len();
    let positives: usize = indices.iter().map(|&i| usize::from(ctx.labels[i])).sum();
    let leaf = TreeNode::Leaf {
        score: positives as f64 / n as f64 - 0.5,
    };
    if depth >= ctx.max_depth || positives == 0 || positives == n || n < 2 * ctx.min_leaf {
        return leaf;
    }

    let features: Vec<usize> = match picker {
        FeaturePicker::AllFeatures => (0..ctx.dim).collect(),
        FeaturePicker::Sampled { rng, count } => {
            let mut chosen = rand::seq::index::sample(*rng, ctx.dim, *count).into_vec();
            chosen.sort_unstable();
            chosen
        }
    };

    let parent_gini = gini_from_counts(positives as f64, n as f64);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(n);
    for &feature in &features {
        pairs.clear();
        pairs.extend(indices.iter().map(|&i| (ctx.rows[i][feature], ctx.labels[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let total_pos = positives as f64;
        let mut left_n = 0.0;
        let mut left_pos = 0.0;
        for w in 0..n - 1 {
            left_n += 1.0;
            left_pos += f64::from(pairs[w].1);
            if pairs[w].0 == pairs[w + 1].0 {
                continue;
            }
            let right_n = n as f64 - left_n;
            if (left_n as usize) < ctx.min_leaf || (right_n as usize) < ctx.min_leaf {
                continue;
            }
            let weighted = (left_n * gini_from_counts(left_pos, left_n)
                + right_n * gini_from_counts(total_pos - left_pos, right_n))
                / n as f64;
            let gain = parent_gini - weighted;
            if best.map_or(true, |(g, _, _)| gain > g + 1e-12) {
                let (lo, hi) = (pairs[w].0, pairs[w + 1].0);
                // The midpoint of near-adjacent floats can round up to
                // `hi`, which would route every row left and leave an
                // empty child; `lo` always keeps both sides nonempty.
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some((gain, feature, threshold));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        return leaf;
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| ctx.rows[i][feature] <= threshold);
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(grow(ctx, &left_idx, depth + 1, picker)),
        right: Box::new(grow(ctx, &right_idx, depth + 1, picker)),
    }
}

/// Fit a single CART tree on dense features.
pub fn fit_decision_tree(train: &LabeledMatrix, config: &TreeConfig) -> Result<ClassifierModel> {
    if train.len() == 0 {
        return Err(Error::InvalidInput("cannot fit on an empty training set".into()));
    }
    if config.min_leaf == 0 {
        return Err(Error::InvalidInput("min_leaf must be at least 1".into()));
    }
    let rows = dense_rows(train)?;
    let labels = binary_labels(train);
    let ctx = GrowContext {
        rows: &rows,
        labels: &labels,
        dim: train.features.dim(),
        max_depth: config.max_depth,
        min_leaf: config.min_leaf,
    };
    let indices: Vec<usize> = (0..train.len()).collect();
    let root = grow(&ctx, &indices, 0, &mut FeaturePicker::AllFeatures);
    Ok(ClassifierModel {
        algorithm: Algorithm::DecisionTree,
        feature_dimension: train.features.dim(),
        params: ModelParams::Tree { root },
    })
}

#[cfg(test)]
pub(super) fn xor_dataset() -> LabeledMatrix {
    use crate::corpus::Sentiment;
    use crate::matrix::FeatureMatrix;
    LabeledMatrix::new(
        FeatureMatrix::dense(
            vec![
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
            ],
            2,
        )
        .unwrap(),
        vec![
            Sentiment::Negative,
            Sentiment::Positive,
            Sentiment::Positive,
            Sentiment::Negative,
        ],
    )
    .unwrap()
}

#[cfg(test)]
pub(super) fn training_accuracy(model: &ClassifierModel, data: &LabeledMatrix) -> f64 {
    let mut hits = 0usize;
    for (i, label) in data.labels.iter().enumerate() {
        let row = data.features.row(i);
        if model.predict(&row).unwrap() == *label {
            hits += 1;
        }
    }
    hits as f64 / data.len() as f64
}
