//! Parsing, validation, cleaning, labeling, splitting, and summary statistics
//! for the drug-review corpus.
//!
//! The input is a UTF-8 TSV with columns
//! `uniqueID, drugName, condition, review, rating, date, usefulCount`.
//! The review field is double-quoted and may contain HTML entities and
//! embedded newlines; entities are decoded at parse time so downstream
//! stages always see plain text.

use std::collections::HashSet;
use std::io::Read;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Substring that marks a scraping artifact in the condition column
/// (rows like `"3</span> users found this comment helpful."`).
pub const JUNK_CONDITION_MARKER: &str = "</span>";

/// One row of the drug-review corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub unique_id: u64,
    pub drug_name: String,
    /// Medical condition the drug was taken for; absent in some raw rows.
    pub condition: Option<String>,
    /// Review text with HTML entities already decoded.
    pub review_text: String,
    /// Patient rating in 1..=10.
    pub rating: u8,
    pub date: NaiveDate,
    pub useful_count: u32,
}

/// Binary review sentiment derived from the star rating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Negative,
    Positive,
}

impl Sentiment {
    pub fn is_positive(self) -> bool {
        matches!(self, Sentiment::Positive)
    }

    /// Label as a ±1 target for margin-based learners.
    pub fn to_pm1(self) -> f64 {
        match self {
            Sentiment::Positive => 1.0,
            Sentiment::Negative => -1.0,
        }
    }

    /// Classify a real-valued decision score; ties (score = 0) resolve to
    /// negative.
    pub fn from_score(score: f64) -> Sentiment {
        if score > 0.0 {
            Sentiment::Positive
        } else {
            Sentiment::Negative
        }
    }
}

impl std::fmt::Display for Sentiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sentiment::Negative => write!(f, "negative"),
            Sentiment::Positive => write!(f, "positive"),
        }
    }
}

/// A rating of 6..=10 is positive, 1..=5 negative.
pub fn derive_label(rating: u8) -> Result<Sentiment> {
    match rating {
        1..=5 => Ok(Sentiment::Negative),
        6..=10 => Ok(Sentiment::Positive),
        other => Err(Error::InvalidInput(format!(
            "rating {other} outside 1..=10"
        ))),
    }
}

/// A malformed data row, reported with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

/// Result of parsing a TSV stream: valid records plus per-row errors.
#[derive(Debug, Default)]
pub struct ParseOutput {
    pub records: Vec<ReviewRecord>,
    pub row_errors: Vec<RowError>,
}

const EXPECTED_COLUMNS: [&str; 7] = [
    "uniqueID",
    "drugName",
    "condition",
    "review",
    "rating",
    "date",
    "usefulCount",
];

/// Parse the raw TSV byte stream.
///
/// A missing or wrong header is fatal. Rows with a non-integer rating or
/// usefulCount, an out-of-range rating, or an unparseable date are collected
/// as [`RowError`]s instead of being silently dropped. HTML entities in the
/// review field are decoded.
pub fn parse_tsv<R: Read>(input: R) -> Result<ParseOutput> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .flexible(true)
        .from_reader(input);

    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(format!("missing header row: {e}")))?
        .clone();
    validate_header(&headers)?;

    let mut out = ParseOutput::default();
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line())
                    .unwrap_or(0);
                out.row_errors.push(RowError {
                    line,
                    message: format!("unreadable row: {e}"),
                });
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&row) {
            Ok(record) => out.records.push(record),
            Err(message) => out.row_errors.push(RowError { line, message }),
        }
    }
    Ok(out)
}

fn validate_header(headers: &csv::StringRecord) -> Result<()> {
    if headers.len() != EXPECTED_COLUMNS.len() {
        return Err(Error::Parse(format!(
            "expected {} tab-separated columns in header, got {}",
            EXPECTED_COLUMNS.len(),
            headers.len()
        )));
    }
    for (i, expected) in EXPECTED_COLUMNS.iter().enumerate() {
        let got = headers.get(i).unwrap_or("").trim();
        // Some distributions of the file leave the id column unnamed.
        let ok = got == *expected || (i == 0 && got.is_empty());
        if !ok {
            return Err(Error::Parse(format!(
                "header column {i} is {got:?}, expected {expected:?}"
            )));
        }
    }
    Ok(())
}

fn parse_row(row: &csv::StringRecord) -> std::result::Result<ReviewRecord, String> {
    if row.len() != EXPECTED_COLUMNS.len() {
        return Err(format!(
            "expected {} fields, got {}",
            EXPECTED_COLUMNS.len(),
            row.len()
        ));
    }
    let field = |i: usize| row.get(i).unwrap_or("");

    let unique_id: u64 = field(0)
        .trim()
        .parse()
        .map_err(|_| format!("non-integer uniqueID {:?}", field(0)))?;
    let drug_name = field(1).trim().to_string();
    let condition = {
        let c = field(2).trim();
        if c.is_empty() {
            None
        } else {
            Some(c.to_string())
        }
    };
    let review_text = decode_html_entities(field(3));
    let rating = parse_integer_field(field(4)).ok_or_else(|| {
        format!("non-integer rating {:?}", field(4))
    })?;
    if !(1..=10).contains(&rating) {
        return Err(format!("rating {rating} outside 1..=10"));
    }
    let date = parse_date(field(5)).ok_or_else(|| {
        format!("unparseable date {:?}", field(5))
    })?;
    let useful_count = parse_integer_field(field(6)).ok_or_else(|| {
        format!("non-integer usefulCount {:?}", field(6))
    })?;
    let useful_count = u32::try_from(useful_count)
        .map_err(|_| format!("usefulCount {useful_count} out of range"))?;

    Ok(ReviewRecord {
        unique_id,
        drug_name,
        condition,
        review_text,
        rating: rating as u8,
        date,
        useful_count,
    })
}

/// Accept `9` as well as the `9.0` form some exports use; reject anything
/// with a fractional part.
fn parse_integer_field(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    let v: f64 = s.parse().ok()?;
    if v.fract() == 0.0 && v.abs() < 9e15 {
        Some(v as i64)
    } else {
        None
    }
}

/// The dataset's native `"May 20, 2009"` format plus ISO-8601.
fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%B %d, %Y")
        .or_else(|_| NaiveDate::parse_from_str(s, "%Y-%m-%d"))
        .ok()
}

/// Decode the HTML entities that occur in the raw review fields.
///
/// Named entities (`&quot;` `&amp;` `&apos;` `&lt;` `&gt;` `&nbsp;`) and
/// numeric forms (`&#039;`, `&#x27;`) are decoded; unknown entities are left
/// verbatim.
pub fn decode_html_entities(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find('&') {
        out.push_str(&rest[..start]);
        let tail = &rest[start..];
        match tail.find(';') {
            // Entities are short; anything long is not one.
            Some(end) if end <= 10 => {
                let entity = &tail[1..end];
                match decode_entity(entity) {
                    Some(ch) => out.push(ch),
                    None => out.push_str(&tail[..=end]),
                }
                rest = &tail[end + 1..];
            }
            _ => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_entity(entity: &str) -> Option<char> {
    match entity {
        "quot" => Some('"'),
        "amp" => Some('&'),
        "apos" => Some('\''),
        "lt" => Some('<'),
        "gt" => Some('>'),
        "nbsp" => Some(' '),
        _ => {
            let code = if let Some(hex) = entity.strip_prefix("#x").or_else(|| entity.strip_prefix("#X")) {
                u32::from_str_radix(hex, 16).ok()?
            } else if let Some(dec) = entity.strip_prefix('#') {
                dec.parse().ok()?
            } else {
                return None;
            };
            char::from_u32(code)
        }
    }
}

/// Counts of rows removed by each cleaning rule.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input_rows: usize,
    pub null_condition_removed: usize,
    pub junk_condition_removed: usize,
    pub duplicate_id_removed: usize,
    pub output_rows: usize,
}

/// Drop rows with an absent condition, junk conditions (scraping artifacts
/// containing [`JUNK_CONDITION_MARKER`]), and duplicate ids (first
/// occurrence kept). Input order is otherwise preserved. Cleaning is total
/// and idempotent.
pub fn clean_corpus(records: Vec<ReviewRecord>) -> Vec<ReviewRecord> {
    clean_corpus_with_report(records).0
}

/// [`clean_corpus`] plus per-rule removal counts.
pub fn clean_corpus_with_report(records: Vec<ReviewRecord>) -> (Vec<ReviewRecord>, CleaningReport) {
    let mut report = CleaningReport {
        input_rows: records.len(),
        ..CleaningReport::default()
    };
    let mut seen = HashSet::with_capacity(records.len());
    let mut kept = Vec::with_capacity(records.len());
    for record in records {
        match &record.condition {
            None => {
                report.null_condition_removed += 1;
                continue;
            }
            Some(c) if c.contains(JUNK_CONDITION_MARKER) => {
                report.junk_condition_removed += 1;
                continue;
            }
            Some(_) => {}
        }
        if !seen.insert(record.unique_id) {
            report.duplicate_id_removed += 1;
            continue;
        }
        kept.push(record);
    }
    report.output_rows = kept.len();
    (kept, report)
}

/// A seeded train/test partition of the cleaned corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<ReviewRecord>,
    pub test: Vec<ReviewRecord>,
    pub seed: u64,
    pub train_fraction: f64,
}

/// Partition records by a seeded uniform permutation; the first
/// ⌊fraction·n⌋ permuted rows form the training set.
///
/// Membership is a deterministic function of (input order, fraction, seed),
/// so splitting once and reusing the result gives every feature
/// representation the same rows.
pub fn split(records: Vec<ReviewRecord>, train_fraction: f64, seed: u64) -> Result<CorpusSplit> {
    if records.is_empty() {
        return Err(Error::InvalidInput("cannot split an empty corpus".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n = records.len();
    let n_train = (train_fraction * n as f64).floor() as usize;

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut slots: Vec<Option<ReviewRecord>> = records.into_iter().map(Some).collect();
    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);
    for (rank, &idx) in order.iter().enumerate() {
        let record = slots[idx].take().expect("each index visited once");
        if rank < n_train {
            train.push(record);
        } else {
            test.push(record);
        }
    }
    Ok(CorpusSplit {
        train,
        test,
        seed,
        train_fraction,
    })
}

/// Summary of `useful_count` over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsefulCountSummary {
    pub min: u32,
    pub max: u32,
    pub mean: f64,
    /// Sample standard deviation (n−1 denominator); 0 for a single row.
    pub std_dev: f64,
}

/// Tabular corpus statistics (stands in for the dataset bar plots).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub row_count: usize,
    /// Distinct drugs per condition, sorted by count descending then name.
    pub condition_drug_counts: Vec<(String, usize)>,
    /// Counts of ratings 1..=10; bin `i` holds rating `i + 1`.
    pub rating_histogram: [u64; 10],
    pub useful_count: UsefulCountSummary,
    pub positive_count: u64,
    pub negative_count: u64,
}

/// Count distinct drugs per condition, rating histogram, label totals, and
/// the useful-count distribution.
pub fn summarize(records: &[ReviewRecord]) -> CorpusStats {
    use std::collections::BTreeMap;

    let mut drugs_by_condition: BTreeMap<&str, HashSet<&str>> = BTreeMap::new();
    let mut histogram = [0u64; 10];
    let mut positive = 0u64;
    let mut negative = 0u64;
    let mut min = u32::MAX;
    let mut max = 0u32;
    let mut sum = 0f64;

    for r in records {
        if let Some(cond) = &r.condition {
            drugs_by_condition
                .entry(cond.as_str())
                .or_default()
                .insert(r.drug_name.as_str());
        }
        histogram[(r.rating - 1) as usize] += 1;
        if r.rating >= 6 {
            positive += 1;
        } else {
            negative += 1;
        }
        min = min.min(r.useful_count);
        max = max.max(r.useful_count);
        sum += f64::from(r.useful_count);
    }

    let n = records.len();
    let mean = if n == 0 { 0.0 } else { sum / n as f64 };
    let std_dev = if n < 2 {
        0.0
    } else {
        let ss: f64 = records
            .iter()
            .map(|r| {
                let d = f64::from(r.useful_count) - mean;
                d * d
            })
            .sum();
        (ss / (n as f64 - 1.0)).sqrt()
    };

    let mut condition_drug_counts: Vec<(String, usize)> = drugs_by_condition
        .into_iter()
        .map(|(c, drugs)| (c.to_string(), drugs.len()))
        .collect();
    condition_drug_counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    CorpusStats {
        row_count: n,
        condition_drug_counts,
        rating_histogram: histogram,
        useful_count: UsefulCountSummary {
            min: if n == 0 { 0 } else { min },
            max,
            mean,
            std_dev,
        },
        positive_count: positive,
        negative_count: negative,
    }
}

impl CorpusStats {
    /// Render as CSV: one `section,key,value` row per statistic.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,key,value\n");
        out.push_str(&format!("corpus,row_count,{}\n", self.row_count));
        out.push_str(&format!("labels,positive,{}\n", self.positive_count));
        out.push_str(&format!("labels,negative,{}\n", self.negative_count));
        for (i, count) in self.rating_histogram.iter().enumerate() {
            out.push_str(&format!("rating_histogram,{},{}\n", i + 1, count));
        }
        out.push_str(&format!("useful_count,min,{}\n", self.useful_count.min));
        out.push_str(&format!("useful_count,max,{}\n", self.useful_count.max));
        out.push_str(&format!("useful_count,mean,{:.6}\n", self.useful_count.mean));
        out.push_str(&format!("useful_count,std_dev,{:.6}\n", self.useful_count.std_dev));
        for (condition, count) in &self.condition_drug_counts {
            out.push_str(&format!(
                "condition_drug_count,{},{}\n",
                csv_escape(condition),
                count
            ));
        }
        out
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}
