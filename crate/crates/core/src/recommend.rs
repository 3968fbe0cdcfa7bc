//! Drug recommendation: fuse four models' sentiment votes with
//! usefulness-normalized review weight into per-condition drug rankings.
//!
//! Each review contributes `votes * normalized_useful_count`. A drug's
//! overall score is the sum of its reviews' contributions within a
//! condition; the final score divides the overall score by the condition's
//! divisor (by default the number of distinct drugs in the condition, a
//! per-condition constant that can never reorder drugs within it).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{ReviewRecord, Sentiment};
use crate::{Error, Result};

/// How many models vote on every record.
pub const VOTING_MODELS: usize = 4;

/// One record's fused model outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinedPrediction {
    pub record_id: u64,
    /// How many of the four models predicted positive (0 to 4).
    pub votes: u8,
    pub predictions: [Sentiment; VOTING_MODELS],
}

/// Fuse exactly four model predictions into a vote count.
pub fn combine_predictions(
    record_id: u64,
    predictions: &[Sentiment],
) -> Result<CombinedPrediction> {
    let fixed: [Sentiment; VOTING_MODELS] = predictions.try_into().map_err(|_| {
        Error::InvalidInput(format!(
            "expected exactly {VOTING_MODELS} model predictions, got {}",
            predictions.len()
        ))
    })?;
    let votes = fixed.iter().filter(|p| p.is_positive()).count() as u8;
    Ok(CombinedPrediction {
        record_id,
        votes,
        predictions: fixed,
    })
}

/// Min-max normalize useful counts within each condition group.
///
/// Returns record id -> normalized value in [0, 1]. A condition whose
/// counts are all equal (including single-review conditions) maps to 1.0.
/// Records with no condition are grouped under the empty string.
pub fn normalize_usefulcount(records: &[ReviewRecord]) -> BTreeMap<u64, f64> {
    let mut groups: BTreeMap<&str, Vec<&ReviewRecord>> = BTreeMap::new();
    for record in records {
        groups
            .entry(record.condition.as_deref().unwrap_or(""))
            .or_default()
            .push(record);
    }
    let mut normalized = BTreeMap::new();
    for members in groups.values() {
        let min = members.iter().map(|r| r.useful_count).min().unwrap_or(0);
        let max = members.iter().map(|r| r.useful_count).max().unwrap_or(0);
        for record in members {
            let value = if max == min {
                1.0
            } else {
                f64::from(record.useful_count - min) / f64::from(max - min)
            };
            normalized.insert(record.unique_id, value);
        }
    }
    normalized
}

/// One review's inputs to drug scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredReview {
    pub condition: String,
    pub drug_name: String,
    pub votes: u8,
    pub norm_useful: f64,
}

/// What a drug's overall score is divided by to produce the final score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivisorMode {
    /// The number of distinct drugs in the condition (the default). This is
    /// constant across a condition, so it cannot reorder its drugs.
    DistinctDrugs,
    /// The drug's own review count, an alternate mean-per-review reading.
    ReviewsPerDrug,
}

/// One drug's aggregate standing within a condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDrug {
    pub drug_name: String,
    /// Sum of votes x norm_useful over the drug's reviews in the condition.
    pub overall_score: f64,
    /// Overall score divided by the condition's divisor.
    pub final_score: f64,
    pub review_count: u64,
}

/// A condition's drugs, ranked by final score descending (ties break by
/// drug name ascending).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRanking {
    pub condition: String,
    pub review_count: u64,
    pub drug_count: u64,
    pub drugs: Vec<RankedDrug>,
}

/// Rankings for every condition in the scored set, most-reviewed
/// condition first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationTable {
    /// Identifiers of the models whose votes produced the table.
    pub models: Vec<String>,
    pub divisor: DivisorMode,
    pub conditions: Vec<ConditionRanking>,
}

/// Aggregate scored reviews into a full recommendation table.
pub fn score_drugs(
    scored: &[ScoredReview],
    models: &[String],
    divisor: DivisorMode,
) -> Result<RecommendationTable> {
    if scored.is_empty() {
        return Err(Error::InvalidInput("cannot rank an empty scored set".into()));
    }
    for review in scored {
        if review.votes > VOTING_MODELS as u8 {
            return Err(Error::InvalidInput(format!(
                "votes {} exceed the {VOTING_MODELS} voting models",
                review.votes
            )));
        }
        if !(review.norm_useful.is_finite() && (0.0..=1.0).contains(&review.norm_useful)) {
            return Err(Error::InvalidInput(format!(
                "normalized useful count {} outside [0, 1]",
                review.norm_useful
            )));
        }
    }

    let mut per_condition: BTreeMap<&str, BTreeMap<&str, (f64, u64)>> = BTreeMap::new();
    for review in scored {
        let (overall, reviews) = per_condition
            .entry(review.condition.as_str())
            .or_default()
            .entry(review.drug_name.as_str())
            .or_insert((0.0, 0));
        *overall += f64::from(review.votes) * review.norm_useful;
        *reviews += 1;
    }

    let mut conditions: Vec<ConditionRanking> = per_condition
        .into_iter()
        .map(|(condition, drugs)| {
            let drug_count = drugs.len() as u64;
            let mut ranked: Vec<RankedDrug> = drugs
                .into_iter()
                .map(|(drug_name, (overall_score, review_count))| {
                    let denominator = match divisor {
                        DivisorMode::DistinctDrugs => drug_count as f64,
                        DivisorMode::ReviewsPerDrug => review_count as f64,
                    };
                    RankedDrug {
                        drug_name: drug_name.to_string(),
                        overall_score,
                        final_score: overall_score / denominator,
                        review_count,
                    }
                })
                .collect();
            ranked.sort_by(|a, b| {
                b.final_score
                    .total_cmp(&a.final_score)
                    .then_with(|| a.drug_name.cmp(&b.drug_name))
            });
            ConditionRanking {
                condition: condition.to_string(),
                review_count: ranked.iter().map(|d| d.review_count).sum(),
                drug_count,
                drugs: ranked,
            }
        })
        .collect();
    conditions.sort_by(|a, b| {
        b.review_count
            .cmp(&a.review_count)
            .then_with(|| a.condition.cmp(&b.condition))
    });

    Ok(RecommendationTable {
        models: models.to_vec(),
        divisor,
        conditions,
    })
}

/// The first `n` ranked drugs of a condition (fewer if it has fewer).
pub fn top_n<'t>(
    table: &'t RecommendationTable,
    condition: &str,
    n: usize,
) -> Result<&'t [RankedDrug]> {
    let ranking = table
        .conditions
        .iter()
        .find(|c| c.condition == condition)
        .ok_or_else(|| Error::UnknownCondition(condition.to_string()))?;
    Ok(&ranking.drugs[..n.min(ranking.drugs.len())])
}

/// Render the table as CSV rows `condition,rank,drug,final_score`,
/// optionally truncated to the first `max_conditions` (most-reviewed
/// first) and the top `max_drugs` per condition.
pub fn table_to_csv(
    table: &RecommendationTable,
    max_conditions: Option<usize>,
    max_drugs: Option<usize>,
) -> String {
    let mut out = String::from("condition,rank,drug,final_score\n");
    let condition_limit = max_conditions.unwrap_or(table.conditions.len());
    for ranking in table.conditions.iter().take(condition_limit) {
        let drug_limit = max_drugs.unwrap_or(ranking.drugs.len());
        for (rank, drug) in ranking.drugs.iter().take(drug_limit).enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                escape_csv_field(&ranking.condition),
                rank + 1,
                escape_csv_field(&drug.drug_name),
                drug.final_score,
            );
        }
    }
    out
}

fn escape_csv_field(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use Sentiment::{Negative, Positive};

    fn record(id: u64, condition: &str, useful: u32) -> ReviewRecord {
        ReviewRecord {
            unique_id: id,
            drug_name: "Drug".into(),
            condition: Some(condition.into()),
            review_text: "fine".into(),
            rating: 8,
            date: NaiveDate::from_ymd_opt(2012, 5, 17).unwrap(),
            useful_count: useful,
        }
    }

    fn review(condition: &str, drug: &str, votes: u8, norm: f64) -> ScoredReview {
        ScoredReview {
            condition: condition.into(),
            drug_name: drug.into(),
            votes,
            norm_useful: norm,
        }
    }

    fn model_ids() -> Vec<String> {
        vec!["a".into(), "b".into(), "c".into(), "d".into()]
    }

    #[test]
    fn vote_counting_and_arity() {
        let three = combine_predictions(7, &[Positive, Positive, Negative, Positive]).unwrap();
        assert_eq!(three.votes, 3);
        assert_eq!(three.record_id, 7);
        assert_eq!(combine_predictions(1, &[Negative; 4]).unwrap().votes, 0);
        assert_eq!(combine_predictions(1, &[Positive; 4]).unwrap().votes, 4);
        assert!(combine_predictions(1, &[Positive; 3]).is_err());
        assert!(combine_predictions(1, &[Positive; 5]).is_err());
    }

    #[test]
    fn minmax_normalization_within_a_condition() {
        let records = vec![record(1, "Pain", 0), record(2, "Pain", 10), record(3, "Pain", 20)];
        let norm = normalize_usefulcount(&records);
        assert_eq!(norm[&1], 0.0);
        assert_eq!(norm[&2], 0.5);
        assert_eq!(norm[&3], 1.0);
    }

    #[test]
    fn degenerate_groups_normalize_to_one() {
        let records = vec![
            record(1, "Pain", 7),
            record(2, "Acne", 3),
            record(3, "Acne", 3),
        ];
        let norm = normalize_usefulcount(&records);
        assert_eq!(norm[&1], 1.0, "single-review condition");
        assert_eq!(norm[&2], 1.0, "constant-count condition");
        assert_eq!(norm[&3], 1.0);
    }

    #[test]
    fn conditions_normalize_independently() {
        let records = vec![
            record(1, "Pain", 0),
            record(2, "Pain", 100),
            record(3, "Acne", 100),
            record(4, "Acne", 300),
        ];
        let norm = normalize_usefulcount(&records);
        assert_eq!(norm[&1], 0.0);
        assert_eq!(norm[&2], 1.0);
        assert_eq!(norm[&3], 0.0);
        assert_eq!(norm[&4], 1.0);
    }

    #[test]
    fn single_review_table() {
        let table = score_drugs(
            &[review("Pain", "Alpha", 4, 1.0)],
            &model_ids(),
            DivisorMode::DistinctDrugs,
        )
        .unwrap();
        assert_eq!(table.conditions.len(), 1);
        let ranking = &table.conditions[0];
        assert_eq!(ranking.drug_count, 1);
        assert_eq!(ranking.drugs[0].overall_score, 4.0);
        assert_eq!(ranking.drugs[0].final_score, 4.0);
    }

    #[test]
    fn hand_scored_two_drug_condition() {
        let scored = vec![
            review("Pain", "Alpha", 4, 1.0),
            review("Pain", "Alpha", 2, 0.5),
            review("Pain", "Beta", 1, 1.0),
        ];
        let table = score_drugs(&scored, &model_ids(), DivisorMode::DistinctDrugs).unwrap();
        let ranking = &table.conditions[0];
        assert_eq!(ranking.drug_count, 2);
        let alpha = &ranking.drugs[0];
        let beta = &ranking.drugs[1];
        assert_eq!(alpha.drug_name, "Alpha");
        assert_eq!(alpha.overall_score, 5.0);
        assert_eq!(alpha.final_score, 2.5);
        assert_eq!(beta.drug_name, "Beta");
        assert_eq!(beta.overall_score, 1.0);
        assert_eq!(beta.final_score, 0.5);
    }

    #[test]
    fn zero_votes_rank_alphabetically() {
        let scored = vec![
            review("Pain", "Zeta", 0, 1.0),
            review("Pain", "Alpha", 0, 0.8),
            review("Pain", "Midway", 0, 0.1),
        ];
        let table = score_drugs(&scored, &model_ids(), DivisorMode::DistinctDrugs).unwrap();
        let names: Vec<&str> = table.conditions[0].drugs.iter().map(|d| d.drug_name.as_str()).collect();
        assert_eq!(names, ["Alpha", "Midway", "Zeta"]);
        assert!(table.conditions[0].drugs.iter().all(|d| d.final_score == 0.0));
    }

    #[test]
    fn zero_vote_reviews_never_move_overall_scores() {
        let base = vec![
            review("Pain", "Alpha", 3, 0.9),
            review("Pain", "Beta", 2, 0.4),
        ];
        let mut extended = base.clone();
        extended.push(review("Pain", "Alpha", 0, 1.0));
        extended.push(review("Pain", "Beta", 0, 0.7));

        let before = score_drugs(&base, &model_ids(), DivisorMode::DistinctDrugs).unwrap();
        let after = score_drugs(&extended, &model_ids(), DivisorMode::DistinctDrugs).unwrap();
        for (a, b) in before.conditions[0].drugs.iter().zip(&after.conditions[0].drugs) {
            assert_eq!(a.drug_name, b.drug_name);
            assert_eq!(a.overall_score, b.overall_score);
        }
    }

    #[test]
    fn rescaling_one_conditions_counts_keeps_its_ranking() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..50 {
            let n = rng.gen_range(4..40);
            let records: Vec<ReviewRecord> = (0..n)
                .map(|i| {
                    let condition = if i % 2 == 0 { "Pain" } else { "Acne" };
                    let mut r = record(i as u64, condition, rng.gen_range(0..50) * 4);
                    r.drug_name = format!("Drug{}", rng.gen_range(0..5));
                    r
                })
                .collect();
            let votes: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=4)).collect();

            let scored_from = |records: &[ReviewRecord]| {
                let norm = normalize_usefulcount(records);
                let scored: Vec<ScoredReview> = records
                    .iter()
                    .zip(&votes)
                    .map(|(r, &v)| ScoredReview {
                        condition: r.condition.clone().unwrap(),
                        drug_name: r.drug_name.clone(),
                        votes: v,
                        norm_useful: norm[&r.unique_id],
                    })
                    .collect();
                score_drugs(&scored, &model_ids(), DivisorMode::DistinctDrugs).unwrap()
            };

            let original = scored_from(&records);
            let mut rescaled = records.clone();
            for r in &mut rescaled {
                if r.condition.as_deref() == Some("Pain") {
                    r.useful_count *= 3;
                }
            }
            let transformed = scored_from(&rescaled);

            for (a, b) in original.conditions.iter().zip(&transformed.conditions) {
                assert_eq!(a.condition, b.condition);
                let names_a: Vec<&str> = a.drugs.iter().map(|d| d.drug_name.as_str()).collect();
                let names_b: Vec<&str> = b.drugs.iter().map(|d| d.drug_name.as_str()).collect();
                assert_eq!(names_a, names_b);
            }
        }
    }

    #[test]
    fn per_condition_constant_divisor_cannot_reorder() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..50 {
            let n = rng.gen_range(3..30);
            let scored: Vec<ScoredReview> = (0..n)
                .map(|_| {
                    review(
                        ["Pain", "Acne"][rng.gen_range(0..2)],
                        ["A", "B", "C", "D"][rng.gen_range(0..4)],
                        rng.gen_range(0..=4),
                        f64::from(rng.gen_range(0..=10)) / 10.0,
                    )
                })
                .collect();
            let table = score_drugs(&scored, &model_ids(), DivisorMode::DistinctDrugs).unwrap();
            for ranking in &table.conditions {
                let by_final: Vec<&str> =
                    ranking.drugs.iter().map(|d| d.drug_name.as_str()).collect();
                let mut by_overall = ranking.drugs.clone();
                by_overall.sort_by(|a, b| {
                    b.overall_score
                        .total_cmp(&a.overall_score)
                        .then_with(|| a.drug_name.cmp(&b.drug_name))
                });
                let names: Vec<&str> = by_overall.iter().map(|d| d.drug_name.as_str()).collect();
                assert_eq!(by_final, names);
            }
        }
    }

    #[test]
    fn top_n_truncates_and_validates() {
        let scored: Vec<ScoredReview> = (0..10)
            .map(|i| review("Pain", &format!("Drug{i:02}"), (i % 5) as u8, 1.0))
            .chain([review("Acne", "Solo", 2, 1.0), review("Acne", "Duo", 3, 1.0)])
            .collect();
        let table = score_drugs(&scored, &model_ids(), DivisorMode::DistinctDrugs).unwrap();

        let four = top_n(&table, "Pain", 4).unwrap();
        assert_eq!(four.len(), 4);
        for w in four.windows(2) {
            assert!(w[0].final_score >= w[1].final_score);
        }
        let two = top_n(&table, "Acne", 4).unwrap();
        assert_eq!(two.len(), 2);
        assert!(matches!(
            top_n(&table, "Missing", 4),
            Err(Error::UnknownCondition(c)) if c == "Missing"
        ));
    }

    #[test]
    fn conditions_order_by_review_volume() {
        let scored = vec![
            review("Rare", "A", 1, 1.0),
            review("Common", "A", 1, 1.0),
            review("Common", "B", 1, 1.0),
            review("Common", "A", 1, 1.0),
        ];
        let table = score_drugs(&scored, &model_ids(), DivisorMode::DistinctDrugs).unwrap();
        assert_eq!(table.conditions[0].condition, "Common");
        assert_eq!(table.conditions[0].review_count, 3);
        assert_eq!(table.conditions[1].condition, "Rare");
    }

    #[test]
    fn csv_view_matches_requested_shape() {
        let scored: Vec<ScoredReview> = (0..6)
            .flat_map(|c| {
                (0..6).map(move |d| {
                    review(&format!("Cond{c}"), &format!("Drug{d}"), 2, 1.0)
                })
            })
            .collect();
        let table = score_drugs(&scored, &model_ids(), DivisorMode::DistinctDrugs).unwrap();
        let csv = table_to_csv(&table, Some(5), Some(4));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "condition,rank,drug,final_score");
        assert_eq!(lines.len(), 1 + 5 * 4);

        let quoted = table_to_csv(
            &score_drugs(
                &[review("3, Weird \"Name\"", "A", 1, 1.0)],
                &model_ids(),
                DivisorMode::DistinctDrugs,
            )
            .unwrap(),
            None,
            None,
        );
        assert!(quoted.contains("\"3, Weird \"\"Name\"\"\""));
    }

    #[test]
    fn scoring_validates_votes_and_normalized_range() {
        assert!(score_drugs(&[], &model_ids(), DivisorMode::DistinctDrugs).is_err());
        assert!(score_drugs(
            &[review("Pain", "A", 5, 1.0)],
            &model_ids(),
            DivisorMode::DistinctDrugs
        )
        .is_err());
        assert!(score_drugs(
            &[review("Pain", "A", 1, 1.5)],
            &model_ids(),
            DivisorMode::DistinctDrugs
        )
        .is_err());
    }

    #[test]
    fn reviews_per_drug_divisor_divides_by_each_drugs_count() {
        let scored = vec![
            review("Pain", "Alpha", 4, 1.0),
            review("Pain", "Alpha", 2, 0.5),
            review("Pain", "Beta", 1, 1.0),
        ];
        let table = score_drugs(&scored, &model_ids(), DivisorMode::ReviewsPerDrug).unwrap();
        let alpha = table.conditions[0].drugs.iter().find(|d| d.drug_name == "Alpha").unwrap();
        let beta = table.conditions[0].drugs.iter().find(|d| d.drug_name == "Beta").unwrap();
        assert_eq!(alpha.final_score, 2.5);
        assert_eq!(beta.final_score, 1.0);
    }
}
