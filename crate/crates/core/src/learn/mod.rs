//! Binary sentiment classifiers behind one fit / decision-score / predict
//! contract: linear models trained by stochastic gradient descent,
//! multinomial naive Bayes, and CART-based tree ensembles.
//!
//! Every model returns a real decision score; `predict` is positive exactly
//! when the score is strictly greater than zero, so a zero score resolves
//! to negative.

mod forest;
mod gbdt;
mod linear;
mod nb;
mod tree;

use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentiment;
use crate::matrix::RowRef;
use crate::resample::LabeledMatrix;
use crate::{Error, Result};

pub use forest::{fit_random_forest, FeatureSubsample, ForestConfig};
pub use gbdt::{fit_gbdt, GbdtConfig};
pub use linear::{
    fit_linear_svc, fit_logistic_regression, fit_perceptron, fit_ridge, fit_sgd_hinge,
    objective_and_gradient, LinearConfig, LinearLoss,
};
pub use nb::fit_multinomial_nb;
pub use tree::{fit_decision_tree, TreeConfig};

/// The supported classifier families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    MultinomialNb,
    LogisticRegression,
    Perceptron,
    Ridge,
    LinearSvc,
    SgdHinge,
    DecisionTree,
    RandomForest,
    Gbdt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::MultinomialNb,
        Algorithm::LogisticRegression,
        Algorithm::Perceptron,
        Algorithm::Ridge,
        Algorithm::LinearSvc,
        Algorithm::SgdHinge,
        Algorithm::DecisionTree,
        Algorithm::RandomForest,
        Algorithm::Gbdt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::MultinomialNb => "multinomial_nb",
            Algorithm::LogisticRegression => "logistic_regression",
            Algorithm::Perceptron => "perceptron",
            Algorithm::Ridge => "ridge",
            Algorithm::LinearSvc => "linear_svc",
            Algorithm::SgdHinge => "sgd_hinge",
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::RandomForest => "random_forest",
            Algorithm::Gbdt => "gbdt",
        }
    }

    /// True for the tree-based families, which require dense features.
    pub fn needs_dense(self) -> bool {
        matches!(
            self,
            Algorithm::DecisionTree | Algorithm::RandomForest | Algorithm::Gbdt
        )
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown algorithm {s:?}")))
    }
}

/// One node of a CART tree. Leaf scores mean different things per family:
/// class-fraction offsets for classification trees and forests, additive
/// log-odds contributions for boosted trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        score: f64,
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    /// Evaluate on a dense row.
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { score } => return *score,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }
}

/// Learned state per classifier family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParams {
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    NaiveBayes {
        /// ln P(class), indexed [negative, positive].
        log_priors: [f64; 2],
        /// Per-class smoothed feature log-probabilities.
        feature_log_probs: [Vec<f64>; 2],
    },
    Tree {
        root: TreeNode,
    },
    Forest {
        trees: Vec<TreeNode>,
    },
    Gbdt {
        /// Base-rate log-odds the ensemble starts from.
        initial: f64,
        shrinkage: f64,
        trees: Vec<TreeNode>,
    },
}

/// A fitted binary classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub algorithm: Algorithm,
    pub feature_dimension: usize,
    pub params: ModelParams,
}

impl ClassifierModel {
    /// Real-valued decision score; positive class iff strictly above zero.
    pub fn decision_score(&self, row: &RowRef<'_>) -> Result<f64> {
        if row.dim() != self.feature_dimension {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dimension,
                got: row.dim(),
            });
        }
        match &self.params {
            ModelParams::Linear { weights, bias } => {
                let mut score = *bias;
                for (index, value) in row.iter_entries() {
                    score += weights[index] * value;
                }
                Ok(score)
            }
            ModelParams::NaiveBayes {
                log_priors,
                feature_log_probs,
            } => {
                let mut score = log_priors[1] - log_priors[0];
                for (index, value) in row.iter_entries() {
                    if value < 0.0 {
                        return Err(Error::InvalidInput(format!(
                            "negative feature value {value} at index {index}; multinomial naive Bayes requires counts"
                        )));
                    }
                    score += value * (feature_log_probs[1][index] - feature_log_probs[0][index]);
                }
                Ok(score)
            }
            ModelParams::Tree { root } => Ok(root.score(&dense_row(row)?)),
            ModelParams::Forest { trees } => {
                let values = dense_row(row)?;
                let sum: f64 = trees.iter().map(|t| t.score(&values)).sum();
                Ok(sum / trees.len() as f64)
            }
            ModelParams::Gbdt {
                initial,
                shrinkage,
                trees,
            } => {
                let values = dense_row(row)?;
                let sum: f64 = trees.iter().map(|t| t.score(&values)).sum();
                Ok(initial + shrinkage * sum)
            }
        }
    }

    pub fn predict(&self, row: &RowRef<'_>) -> Result<Sentiment> {
        Ok(Sentiment::from_score(self.decision_score(row)?))
    }

    /// Scores for every row of a labeled set, in row order.
    pub fn decision_scores(&self, data: &LabeledMatrix) -> Result<Vec<f64>> {
        data.features.rows().map(|r| self.decision_score(&r)).collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let writer = BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(writer, self)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(reader)?)
    }
}

fn dense_row(row: &RowRef<'_>) -> Result<Vec<f64>> {
    match row {
        RowRef::Dense(values) => Ok(values.to_vec()),
        RowRef::Sparse(_) => Err(Error::InvalidInput(
            "tree models require dense features".into(),
        )),
    }
}

/// Hyperparameters for every family, bundled for config-driven dispatch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub linear: LinearConfig,
    pub tree: TreeConfig,
    pub forest: ForestConfig,
    pub gbdt: GbdtConfig,
    pub nb_alpha: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            linear: LinearConfig::default(),
            tree: TreeConfig::default(),
            forest: ForestConfig::default(),
            gbdt: GbdtConfig::default(),
            nb_alpha: 1.0,
        }
    }
}

/// Train any supported algorithm with the bundled settings.
pub fn fit_model(
    algorithm: Algorithm,
    train: &LabeledMatrix,
    settings: &FitSettings,
) -> Result<ClassifierModel> {
    match algorithm {
        Algorithm::MultinomialNb => fit_multinomial_nb(train, settings.nb_alpha),
        Algorithm::LogisticRegression => fit_logistic_regression(train, &settings.linear),
        Algorithm::Perceptron => fit_perceptron(train, &settings.linear),
        Algorithm::Ridge => fit_ridge(train, &settings.linear),
        Algorithm::LinearSvc => fit_linear_svc(train, &settings.linear),
        Algorithm::SgdHinge => fit_sgd_hinge(train, &settings.linear),
        Algorithm::DecisionTree => fit_decision_tree(train, &settings.tree),
        Algorithm::RandomForest => fit_random_forest(train, &settings.forest),
        Algorithm::Gbdt => fit_gbdt(train, &settings.gbdt).map(|(model, _)| model),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::FeatureMatrix;

    #[test]
    fn algorithm_names_round_trip() {
        for algorithm in Algorithm::ALL {
            assert_eq!(algorithm.name().parse::<Algorithm>().unwrap(), algorithm);
            let json = serde_json::to_string(&algorithm).unwrap();
            assert_eq!(json, format!("\"{}\"", algorithm.name()));
        }
        assert!("gradient_boosting".parse::<Algorithm>().is_err());
    }

    #[test]
    fn linear_score_and_sign_convention() {
        let model = ClassifierModel {
            algorithm: Algorithm::Perceptron,
            feature_dimension: 2,
            params: ModelParams::Linear {
                weights: vec![1.0, 0.0],
                bias: 0.0,
            },
        };
        let x = vec![2.0, 5.0];
        assert_eq!(model.decision_score(&RowRef::Dense(&x)).unwrap(), 2.0);
        assert_eq!(model.predict(&RowRef::Dense(&x)).unwrap(), Sentiment::Positive);

        let zero = vec![0.0, 7.0];
        assert_eq!(model.decision_score(&RowRef::Dense(&zero)).unwrap(), 0.0);
        assert_eq!(model.predict(&RowRef::Dense(&zero)).unwrap(), Sentiment::Negative);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let model = ClassifierModel {
            algorithm: Algorithm::Perceptron,
            feature_dimension: 2,
            params: ModelParams::Linear {
                weights: vec![1.0, 0.0],
                bias: 0.0,
            },
        };
        let x = vec![1.0, 2.0, 3.0];
        assert!(matches!(
            model.decision_score(&RowRef::Dense(&x)),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn tree_walk_routes_on_threshold() {
        let root = TreeNode::Split {
            feature: 0,
            threshold: 0.5,
            left: Box::new(TreeNode::Leaf { score: -0.5 }),
            right: Box::new(TreeNode::Leaf { score: 0.5 }),
        };
        assert_eq!(root.score(&[0.5]), -0.5); // boundary goes left
        assert_eq!(root.score(&[0.6]), 0.5);
        assert_eq!(root.depth(), 1);
        assert_eq!(root.leaf_count(), 2);
    }

    #[test]
    fn tree_models_reject_sparse_rows() {
        let model = ClassifierModel {
            algorithm: Algorithm::DecisionTree,
            feature_dimension: 3,
            params: ModelParams::Tree {
                root: TreeNode::Leaf { score: 0.1 },
            },
        };
        let sparse = crate::sparse::SparseVector::empty(3);
        assert!(model.decision_score(&RowRef::Sparse(&sparse)).is_err());
    }

    #[test]
    fn model_json_round_trip_is_prediction_exact() {
        let data = LabeledMatrix::new(
            FeatureMatrix::dense(
                vec![
                    vec![0.1, 1.0],
                    vec![0.9, 0.2],
                    vec![0.2, 0.8],
                    vec![1.0, 0.1],
                ],
                2,
            )
            .unwrap(),
            vec![
                Sentiment::Negative,
                Sentiment::Positive,
                Sentiment::Negative,
                Sentiment::Positive,
            ],
        )
        .unwrap();
        let model = fit_logistic_regression(&data, &LinearConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.write_json(&path).unwrap();
        let loaded = ClassifierModel::read_json(&path).unwrap();
        assert_eq!(model, loaded);
        for row in data.features.rows() {
            let a = model.decision_score(&row).unwrap();
            let b = loaded.decision_score(&row).unwrap();
            assert_eq!(a.to_bits(), b.to_bits(), "round trip must be bit-exact");
        }
    }
}
