//! Random forests: bagged CART trees with per-split feature subsampling.
//!
//! Tree `t` draws its bootstrap sample and split-time feature subsets from
//! an independent random stream derived from (seed, t), so the forest is
//! reproducible regardless of how many threads build it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{binary_labels, dense_rows, grow, FeaturePicker, GrowContext};
use super::{Algorithm, ClassifierModel, ModelParams, TreeNode};
use crate::resample::LabeledMatrix;
use crate::{Error, Result};

/// How many features each split may consider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubsample {
    /// Every feature: turns off split-time randomness.
    All,
    /// `max(1, floor(sqrt(d)))` features, the usual forest default.
    Sqrt,
    /// A fixed number of features.
    Count(usize),
}

impl FeatureSubsample {
    fn resolve(self, dim: usize) -> Result<usize> {
        let count = match self {
            FeatureSubsample::All => dim,
            FeatureSubsample::Sqrt => ((dim as f64).sqrt().floor() as usize).max(1),
            FeatureSubsample::Count(count) => count,
        };
        if count == 0 || count > dim {
            return Err(Error::InvalidInput(format!(
                "feature subsample {count} outside 1..={dim}"
            )));
        }
        Ok(count)
    }
}

/// Hyperparameters for the forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Resample rows with replacement per tree when true.
    pub bootstrap: bool,
    pub feature_subsample: FeatureSubsample,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 1,
            bootstrap: true,
            feature_subsample: FeatureSubsample::Sqrt,
            seed: 42,
        }
    }
}

/// Fit a random forest on dense features.
///
/// The decision score is the mean of the trees' leaf scores.
pub fn fit_random_forest(train: &LabeledMatrix, config: &ForestConfig) -> Result<ClassifierModel> {
    if train.len() == 0 {
        return Err(Error::InvalidInput("cannot fit on an empty training set".into()));
    }
    if config.n_trees == 0 {
        return Err(Error::InvalidInput("a forest needs at least one tree".into()));
    }
    if config.min_leaf == 0 {
        return Err(Error::InvalidInput("min_leaf must be at least 1".into()));
    }
    let dim = train.features.dim();
    let subsample = config.feature_subsample.resolve(dim)?;
    let rows = dense_rows(train)?;
    let labels = binary_labels(train);
    let ctx = GrowContext {
        rows: &rows,
        labels: &labels,
        dim,
        max_depth: config.max_depth,
        min_leaf: config.min_leaf,
    };
    let n = train.len();

    let trees: Vec<TreeNode> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            let indices: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut picker = FeaturePicker::Sampled {
                rng: &mut rng,
                count: subsample,
            };
            grow(&ctx, &indices, 0, &mut picker)
        })
        .collect();

    Ok(ClassifierModel {
        algorithm: Algorithm::RandomForest,
        feature_dimension: dim,
        params: ModelParams::Forest { trees },
    })
}
