//! Classification metrics: confusion counts, precision, recall, F1,
//! accuracy, and tie-aware ROC-AUC, plus the per-model report shape the
//! pipeline emits.
//!
//! Zero-denominator metrics evaluate to 0.0 and are flagged rather than
//! erroring, so a degenerate model still yields a complete report.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentiment;
use crate::{Error, Result};

/// The four cells of a binary confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The same counts with the positive-class role swapped, so positive
    /// metrics on the swap are negative-class metrics on the original.
    pub fn swapped(&self) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }
}

/// Count confusion cells, treating `Positive` as the positive class.
pub fn confusion(predictions: &[Sentiment], labels: &[Sentiment]) -> Result<ConfusionCounts> {
    if predictions.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate zero predictions".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: predictions.len(),
        });
    }
    let mut counts = ConfusionCounts::default();
    for (p, l) in predictions.iter().zip(labels) {
        match (p.is_positive(), l.is_positive()) {
            (true, true) => counts.tp += 1,
            (false, false) => counts.tn += 1,
            (true, false) => counts.fp += 1,
            (false, true) => counts.fn_ += 1,
        }
    }
    Ok(counts)
}

/// A metric value plus whether its denominator was zero (value forced 0.0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub zero_denominator: bool,
}

impl Metric {
    fn ratio(numerator: f64, denominator: f64) -> Metric {
        if denominator == 0.0 {
            Metric {
                value: 0.0,
                zero_denominator: true,
            }
        } else {
            Metric {
                value: numerator / denominator,
                zero_denominator: false,
            }
        }
    }
}

/// tp / (tp + fp)
pub fn precision(c: &ConfusionCounts) -> Metric {
    Metric::ratio(c.tp as f64, (c.tp + c.fp) as f64)
}

/// tp / (tp + fn)
pub fn recall(c: &ConfusionCounts) -> Metric {
    Metric::ratio(c.tp as f64, (c.tp + c.fn_) as f64)
}

/// (tp + tn) / total
pub fn accuracy(c: &ConfusionCounts) -> Metric {
    Metric::ratio((c.tp + c.tn) as f64, c.total() as f64)
}

/// Harmonic mean of precision and recall: 2pr / (p + r).
pub fn f1(c: &ConfusionCounts) -> Metric {
    let p = precision(c);
    let r = recall(c);
    let m = Metric::ratio(2.0 * p.value * r.value, p.value + r.value);
    Metric {
        value: m.value,
        zero_denominator: m.zero_denominator || p.zero_denominator || r.zero_denominator,
    }
}

/// Area under the ROC curve via the tie-aware rank statistic:
/// the fraction of (positive, negative) pairs ranked correctly, counting
/// ties as half. Computed in O(n log n) by sorting scores.
pub fn roc_auc(scores: &[f64], labels: &[Sentiment]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    let positives = labels.iter().filter(|l| l.is_positive()).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::InvalidInput(
            "ROC-AUC needs both classes among the labels".into(),
        ));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("ROC-AUC requires finite scores".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Walk score groups in ascending order. Every positive in a group beats
    // all strictly lower negatives and half-ties with negatives in its group.
    let mut correct_pairs = 0.0f64;
    let mut negatives_below = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut group_pos = 0usize;
        let mut group_neg = 0usize;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]].is_positive() {
                group_pos += 1;
            } else {
                group_neg += 1;
            }
            j += 1;
        }
        correct_pairs +=
            group_pos as f64 * (negatives_below as f64 + 0.5 * group_neg as f64);
        negatives_below += group_neg;
        i = j;
    }
    Ok(correct_pairs / (positives as f64 * negatives as f64))
}

/// Precision, recall, and F1 for one class role.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: Metric,
    pub recall: Metric,
    pub f1: Metric,
}

impl ClassMetrics {
    fn from_counts(c: &ConfusionCounts) -> ClassMetrics {
        ClassMetrics {
            precision: precision(c),
            recall: recall(c),
            f1: f1(c),
        }
    }
}

/// One model's full evaluation: per-class precision/recall/F1 plus overall
/// accuracy and AUC, in the usual Prec / Rec / F1 / Acc. / AUC shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model_id: String,
    pub feature_set_id: String,
    pub confusion: ConfusionCounts,
    pub positive: ClassMetrics,
    pub negative: ClassMetrics,
    pub accuracy: Metric,
    pub auc: f64,
    pub n_test: u64,
}

impl EvaluationReport {
    /// Build a report from decision scores and ground-truth labels.
    ///
    /// Predictions derive from the scores' signs (strictly positive means
    /// positive class), so scores and predicted labels always agree.
    pub fn from_scores(
        model_id: &str,
        feature_set_id: &str,
        scores: &[f64],
        labels: &[Sentiment],
    ) -> Result<EvaluationReport> {
        let predictions: Vec<Sentiment> =
            scores.iter().map(|&s| Sentiment::from_score(s)).collect();
        let counts = confusion(&predictions, labels)?;
        let auc = roc_auc(scores, labels)?;
        Ok(EvaluationReport {
            model_id: model_id.to_string(),
            feature_set_id: feature_set_id.to_string(),
            confusion: counts,
            positive: ClassMetrics::from_counts(&counts),
            negative: ClassMetrics::from_counts(&counts.swapped()),
            accuracy: accuracy(&counts),
            auc,
            n_test: counts.total(),
        })
    }

    pub const CSV_HEADER: &'static str =
        "model,features,class,precision,recall,f1,accuracy,auc,zero_denominator_flags";

    /// Two CSV rows (positive class first), repeating accuracy and AUC on
    /// each row the way per-model metric tables are usually printed.
    pub fn to_csv_rows(&self) -> String {
        let mut out = String::new();
        for (class, metrics) in [("positive", &self.positive), ("negative", &self.negative)] {
            let mut flags: Vec<&str> = Vec::new();
            if metrics.precision.zero_denominator {
                flags.push("precision");
            }
            if metrics.recall.zero_denominator {
                flags.push("recall");
            }
            if metrics.f1.zero_denominator {
                flags.push("f1");
            }
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.model_id,
                self.feature_set_id,
                class,
                metrics.precision.value,
                metrics.recall.value,
                metrics.f1.value,
                self.accuracy.value,
                self.auc,
                flags.join(";"),
            );
        }
        out
    }
}

/// Render many reports as one CSV table.
pub fn reports_to_csv(reports: &[EvaluationReport]) -> String {
    let mut out = String::with_capacity(reports.len() * 160 + 80);
    out.push_str(EvaluationReport::CSV_HEADER);
    out.push('\n');
    for report in reports {
        out.push_str(&report.to_csv_rows());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use Sentiment::{Negative, Positive};

    #[test]
    fn confusion_counts_simple_cases() {
        let c = confusion(&[Positive, Positive, Negative], &[Positive, Positive, Negative])
            .unwrap();
        assert_eq!(c, ConfusionCounts { tp: 2, tn: 1, fp: 0, fn_: 0 });

        let inverted =
            confusion(&[Negative, Negative, Positive], &[Positive, Positive, Negative]).unwrap();
        assert_eq!(inverted.tp, 0);
        assert_eq!(inverted.tn, 0);
        assert_eq!(inverted.fp, 1);
        assert_eq!(inverted.fn_, 2);
    }

    #[test]
    fn confusion_rejects_empty_and_mismatched_input() {
        assert!(confusion(&[], &[]).is_err());
        assert!(confusion(&[Positive], &[Positive, Negative]).is_err());
    }

    #[test]
    fn metric_formulas_on_the_worked_example() {
        let c = ConfusionCounts { tp: 2, fp: 1, fn_: 1, tn: 6 };
        assert!((precision(&c).value - 2.0 / 3.0).abs() < 1e-4);
        assert!((recall(&c).value - 2.0 / 3.0).abs() < 1e-4);
        assert!((accuracy(&c).value - 0.8).abs() < 1e-4);
        assert!((f1(&c).value - 2.0 / 3.0).abs() < 1e-4);
        assert!(!precision(&c).zero_denominator);
    }

    #[test]
    fn perfect_predictions_score_one_everywhere() {
        let labels = [Positive, Negative, Positive, Negative, Negative];
        let c = confusion(&labels, &labels).unwrap();
        assert_eq!(precision(&c).value, 1.0);
        assert_eq!(recall(&c).value, 1.0);
        assert_eq!(accuracy(&c).value, 1.0);
        assert_eq!(f1(&c).value, 1.0);
    }

    #[test]
    fn zero_denominators_flag_and_return_zero() {
        // Never predicting positive: tp = fp = 0.
        let c = confusion(&[Negative, Negative], &[Positive, Negative]).unwrap();
        let p = precision(&c);
        assert_eq!(p.value, 0.0);
        assert!(p.zero_denominator);
        let f = f1(&c);
        assert_eq!(f.value, 0.0);
        assert!(f.zero_denominator);
    }

    #[test]
    fn metrics_match_naive_recounts_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let n = rng.gen_range(1..40);
            let predictions: Vec<Sentiment> = (0..n)
                .map(|_| if rng.gen::<bool>() { Positive } else { Negative })
                .collect();
            let labels: Vec<Sentiment> = (0..n)
                .map(|_| if rng.gen::<bool>() { Positive } else { Negative })
                .collect();
            let c = confusion(&predictions, &labels).unwrap();

            let mut naive = ConfusionCounts::default();
            for i in 0..n {
                if predictions[i] == Positive && labels[i] == Positive {
                    naive.tp += 1;
                }
                if predictions[i] == Negative && labels[i] == Negative {
                    naive.tn += 1;
                }
                if predictions[i] == Positive && labels[i] == Negative {
                    naive.fp += 1;
                }
                if predictions[i] == Negative && labels[i] == Positive {
                    naive.fn_ += 1;
                }
            }
            assert_eq!(c, naive);
            assert_eq!(c.total(), n as u64);

            let hits = predictions.iter().zip(&labels).filter(|(p, l)| p == l).count();
            assert_eq!(accuracy(&c).value, hits as f64 / n as f64);
        }
    }

    #[test]
    fn swapped_counts_equal_label_flipped_metrics() {
        let predictions = [Positive, Negative, Positive, Positive, Negative];
        let labels = [Positive, Positive, Negative, Positive, Negative];
        let c = confusion(&predictions, &labels).unwrap();

        let flip = |s: &Sentiment| if *s == Positive { Negative } else { Positive };
        let flipped_predictions: Vec<Sentiment> = predictions.iter().map(flip).collect();
        let flipped_labels: Vec<Sentiment> = labels.iter().map(flip).collect();
        let flipped = confusion(&flipped_predictions, &flipped_labels).unwrap();

        assert_eq!(c.swapped(), flipped);
        assert_eq!(precision(&c.swapped()), precision(&flipped));
        assert_eq!(recall(&c.swapped()), recall(&flipped));
    }

    #[test]
    fn auc_perfect_separation_and_all_ties() {
        let perfect = roc_auc(&[0.9, 0.8, 0.1], &[Positive, Positive, Negative]).unwrap();
        assert_eq!(perfect, 1.0);
        let ties = roc_auc(&[0.3; 5], &[Positive, Negative, Positive, Negative, Negative])
            .unwrap();
        assert_eq!(ties, 0.5);
    }

    #[test]
    fn auc_requires_both_classes_and_finite_scores() {
        assert!(roc_auc(&[0.1, 0.2], &[Positive, Positive]).is_err());
        assert!(roc_auc(&[0.1, 0.2], &[Negative, Negative]).is_err());
        assert!(roc_auc(&[f64::NAN, 0.2], &[Positive, Negative]).is_err());
        assert!(roc_auc(&[0.1], &[Positive, Negative]).is_err());
    }

    fn brute_force_auc(scores: &[f64], labels: &[Sentiment]) -> f64 {
        let mut pairs = 0.0;
        let mut correct = 0.0;
        for (i, li) in labels.iter().enumerate() {
            if !li.is_positive() {
                continue;
            }
            for (j, lj) in labels.iter().enumerate() {
                if lj.is_positive() {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    correct += 1.0;
                } else if scores[i] == scores[j] {
                    correct += 0.5;
                }
            }
        }
        correct / pairs
    }

    #[test]
    fn auc_matches_exhaustive_pair_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut checked = 0;
        while checked < 500 {
            let n = rng.gen_range(2..=12);
            let labels: Vec<Sentiment> = (0..n)
                .map(|_| if rng.gen::<bool>() { Positive } else { Negative })
                .collect();
            if labels.iter().all(|l| l.is_positive()) || labels.iter().all(|l| !l.is_positive()) {
                continue;
            }
            // Coarse scores force plenty of ties.
            let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..5)) / 4.0).collect();
            let fast = roc_auc(&scores, &labels).unwrap();
            let slow = brute_force_auc(&scores, &labels);
            assert!((fast - slow).abs() < 1e-12, "fast {fast} vs slow {slow}");
            checked += 1;
        }
    }

    #[test]
    fn auc_is_invariant_under_strictly_increasing_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let n = rng.gen_range(4..30);
            let labels: Vec<Sentiment> = (0..n)
                .map(|i| if i % 3 == 0 { Positive } else { Negative })
                .collect();
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let transformed: Vec<f64> = scores.iter().map(|s| (s * 0.7).exp() + 2.0).collect();
            let a = roc_auc(&scores, &labels).unwrap();
            let b = roc_auc(&transformed, &labels).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn negating_tie_free_scores_complements_auc() {
        let scores = [0.1, 0.4, -0.3, 2.0, 1.1, -0.8];
        let labels = [Positive, Negative, Positive, Positive, Negative, Negative];
        let auc = roc_auc(&scores, &labels).unwrap();
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        let complement = roc_auc(&negated, &labels).unwrap();
        assert!((auc + complement - 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_from_scores_on_a_degenerate_model() {
        // Constant-positive scores on 70/30 positive data: accuracy 0.7 and
        // zero negative-class recall.
        let scores = [1.0; 10];
        let labels = [
            Positive, Positive, Positive, Positive, Positive, Positive, Positive, Negative,
            Negative, Negative,
        ];
        let report = EvaluationReport::from_scores("m", "f", &scores, &labels).unwrap();
        assert!((report.accuracy.value - 0.7).abs() < 1e-12);
        assert_eq!(report.negative.recall.value, 0.0);
        assert!(
            !report.negative.recall.zero_denominator,
            "recall 0/3 is a computed zero, not a degenerate one"
        );
        assert!(
            report.negative.precision.zero_denominator,
            "nothing was predicted negative, so negative precision is 0/0"
        );
        assert_eq!(report.auc, 0.5);
        assert_eq!(report.n_test, 10);
    }

    #[test]
    fn report_for_a_ground_truth_oracle_is_all_ones() {
        let labels = [Positive, Negative, Positive, Negative];
        let scores: Vec<f64> = labels.iter().map(|l| l.to_pm1()).collect();
        let report = EvaluationReport::from_scores("oracle", "f", &scores, &labels).unwrap();
        assert_eq!(report.positive.precision.value, 1.0);
        assert_eq!(report.positive.recall.value, 1.0);
        assert_eq!(report.positive.f1.value, 1.0);
        assert_eq!(report.negative.f1.value, 1.0);
        assert_eq!(report.accuracy.value, 1.0);
        assert_eq!(report.auc, 1.0);
    }

    #[test]
    fn report_values_stay_in_unit_range_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let n = rng.gen_range(2..50);
            let labels: Vec<Sentiment> = (0..n)
                .map(|i| if i == 0 || rng.gen::<bool>() { Positive } else { Negative })
                .collect();
            if labels.iter().all(|l| l.is_positive()) {
                continue;
            }
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let report = EvaluationReport::from_scores("m", "f", &scores, &labels).unwrap();
            for v in [
                report.positive.precision.value,
                report.positive.recall.value,
                report.positive.f1.value,
                report.negative.precision.value,
                report.negative.recall.value,
                report.negative.f1.value,
                report.accuracy.value,
                report.auc,
            ] {
                assert!((0.0..=1.0).contains(&v), "metric {v} out of range");
            }
        }
    }

    #[test]
    fn csv_rendering_has_headers_and_two_rows_per_model() {
        let labels = [Positive, Negative, Positive];
        let scores = [0.5, -0.2, 0.9];
        let report = EvaluationReport::from_scores("svc", "tfidf", &scores, &labels).unwrap();
        let csv = reports_to_csv(&[report]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], EvaluationReport::CSV_HEADER);
        assert!(lines[1].starts_with("svc,tfidf,positive,"));
        assert!(lines[2].starts_with("svc,tfidf,negative,"));
    }

    #[test]
    fn json_round_trip_preserves_the_report() {
        let labels = [Positive, Negative, Positive];
        let scores = [0.5, -0.2, 0.9];
        let report = EvaluationReport::from_scores("svc", "tfidf", &scores, &labels).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: EvaluationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, back);
    }
}
