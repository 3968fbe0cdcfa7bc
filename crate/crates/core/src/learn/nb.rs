//! Multinomial naive Bayes over non-negative count-like features.
//!
//! The fitted state is a log-prior per class and, per class, a smoothed
//! log-probability per feature. The decision score is the positive-class
//! log-posterior minus the negative-class log-posterior, so zero means a
//! tie and resolves to negative.

use super::{Algorithm, ClassifierModel, ModelParams};
use crate::corpus::Sentiment;
use crate::resample::LabeledMatrix;
use crate::{Error, Result};

/// Fit multinomial naive Bayes with additive (Laplace) smoothing `alpha`.
///
/// Feature values act as event counts: per class, each feature's
/// probability is its smoothed share of the class total. Both classes must
/// be present and every feature value must be non-negative.
pub fn fit_multinomial_nb(train: &LabeledMatrix, alpha: f64) -> Result<ClassifierModel> {
    if train.len() == 0 {
        return Err(Error::InvalidInput("cannot fit on an empty training set".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!(
            "smoothing alpha must be positive, got {alpha}"
        )));
    }
    let n_positive = train.count(Sentiment::Positive);
    let n_negative = train.count(Sentiment::Negative);
    if n_positive == 0 || n_negative == 0 {
        return Err(Error::InvalidInput(
            "naive Bayes needs both classes in the training set".into(),
        ));
    }

    let dim = train.features.dim();
    let mut totals = [vec![0.0f64; dim], vec![0.0f64; dim]];
    for (i, label) in train.labels.iter().enumerate() {
        let class = usize::from(label.is_positive());
        let row = train.features.row(i);
        for (index, value) in row.iter_entries() {
            if value < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "negative feature value {value} at row {i}, index {index}; multinomial naive Bayes requires counts"
                )));
            }
            totals[class][index] += value;
        }
    }

    let n = train.len() as f64;
    let log_priors = [
        (n_negative as f64 / n).ln(),
        (n_positive as f64 / n).ln(),
    ];
    let feature_log_probs = totals.map(|class_totals| {
        let class_sum: f64 = class_totals.iter().sum();
        let denominator = class_sum + alpha * dim as f64;
        class_totals
            .iter()
            .map(|&t| ((t + alpha) / denominator).ln())
            .collect::<Vec<f64>>()
    });

    Ok(ClassifierModel {
        algorithm: Algorithm::MultinomialNb,
        feature_dimension: dim,
        params: ModelParams::NaiveBayes {
            log_priors,
            feature_log_probs,
        },
    })
}
