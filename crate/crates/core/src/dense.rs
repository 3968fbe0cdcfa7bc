//! Dense document representations: skip-gram word embeddings with negative
//! sampling, mean-of-embedding document vectors, and the 15 hand-crafted
//! review features (counts, date parts, lexicon polarity).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use chrono::Datelike;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ReviewRecord;
use crate::textprep::{clean_text, stopwords};
use crate::{Error, Result};

static SENTIMENT_LEXICON_RAW: &str = include_str!("../data/sentiment_lexicon.txt");

/// Hyperparameters for skip-gram training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Word2VecConfig {
    /// Embedding dimension.
    pub dim: usize,
    /// Maximum context offset; the effective window shrinks uniformly per
    /// center position.
    pub window: usize,
    /// Negative samples per (center, context) pair.
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to 1e-4 of itself.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for Word2VecConfig {
    fn default() -> Self {
        Word2VecConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 42,
        }
    }
}

/// Token embeddings keyed by training-vocabulary tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    /// Row-major `len × dim` input vectors.
    matrix: Vec<f32>,
    dim: usize,
    pub config: Word2VecConfig,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn vector(&self, token: &str) -> Option<&[f32]> {
        self.index
            .get(token)
            .map(|&i| &self.matrix[i * self.dim..(i + 1) * self.dim])
    }

    pub fn token_index(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn vector_at(&self, i: usize) -> &[f32] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    /// Tokens in table order (frequency-descending, ties alphabetical).
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Persist as text: a `count dim` header, then one `token v1 .. vd` line
    /// per entry. Floats use shortest round-trip rendering, so read-back is
    /// bit-exact.
    pub fn write_text(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (i, token) in self.tokens.iter().enumerate() {
            write!(out, "{token}")?;
            for v in self.vector_at(i) {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Read the format written by [`write_text`]. Training metadata is not
    /// part of the format; the returned table carries default config values
    /// with the true dimension.
    pub fn read_text(path: &Path) -> Result<Self> {
        let mut lines = BufReader::new(std::fs::File::open(path)?).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty embedding file".into()))??;
        let mut fields = header.split_whitespace();
        let (Some(count), Some(dim)) = (fields.next(), fields.next()) else {
            return Err(Error::Parse("embedding header needs `count dim`".into()));
        };
        let count: usize = count
            .parse()
            .map_err(|_| Error::Parse(format!("bad embedding count {count:?}")))?;
        let dim: usize = dim
            .parse()
            .map_err(|_| Error::Parse(format!("bad embedding dim {dim:?}")))?;

        let mut tokens = Vec::with_capacity(count);
        let mut index = HashMap::with_capacity(count);
        let mut matrix = Vec::with_capacity(count * dim);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields
                .next()
                .ok_or_else(|| Error::Parse("embedding row missing token".into()))?;
            let start = matrix.len();
            for field in fields {
                let v: f32 = field
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad embedding value {field:?}")))?;
                matrix.push(v);
            }
            if matrix.len() - start != dim {
                return Err(Error::Parse(format!(
                    "embedding row for {token:?} has {} values, expected {dim}",
                    matrix.len() - start
                )));
            }
            index.insert(token.to_string(), tokens.len());
            tokens.push(token.to_string());
        }
        if tokens.len() != count {
            return Err(Error::Parse(format!(
                "embedding file declared {count} rows, found {}",
                tokens.len()
            )));
        }
        Ok(EmbeddingTable {
            tokens,
            index,
            matrix,
            dim,
            config: Word2VecConfig {
                dim,
                ..Word2VecConfig::default()
            },
        })
    }
}

/// Train skip-gram embeddings with negative sampling.
///
/// Deterministic: a single seeded generator drives initialization, window
/// shrinking, and negative draws in one fixed traversal order, and training
/// is single-threaded. Returns the table and the mean per-pair loss of each
/// epoch.
pub fn train_word2vec(
    docs: &[Vec<String>],
    config: Word2VecConfig,
) -> Result<(EmbeddingTable, Vec<f64>)> {
    if docs.iter().all(|d| d.is_empty()) {
        return Err(Error::InvalidInput(
            "cannot train embeddings on an empty corpus".into(),
        ));
    }
    if config.dim == 0 || config.window == 0 {
        return Err(Error::InvalidInput(
            "embedding dim and window must be at least 1".into(),
        ));
    }

    // Vocabulary: frequency-descending, ties alphabetical.
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in docs {
        for token in doc {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<(&str, u64)> = counts.into_iter().collect();
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let tokens: Vec<String> = vocab.iter().map(|(t, _)| t.to_string()).collect();
    let index: HashMap<String, usize> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    let n_tokens = tokens.len();
    let dim = config.dim;

    // Unigram^(3/4) cumulative table for negative sampling.
    let cumulative: Vec<f64> = vocab
        .iter()
        .scan(0.0, |acc, &(_, count)| {
            *acc += (count as f64).powf(0.75);
            Some(*acc)
        })
        .collect();
    let total_mass = *cumulative.last().expect("non-empty vocabulary");

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 0.5 / dim as f32;
    let mut input: Vec<f32> = (0..n_tokens * dim)
        .map(|_| rng.gen_range(-bound..bound))
        .collect();
    let mut output: Vec<f32> = vec![0.0; n_tokens * dim];

    let encoded: Vec<Vec<usize>> = docs
        .iter()
        .map(|doc| doc.iter().map(|t| index[t]).collect())
        .collect();
    let total_positions: usize = encoded.iter().map(Vec::len).sum();
    let schedule_len = (config.epochs * total_positions) as f64;

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut neu1e = vec![0.0f32; dim];
    let mut processed = 0usize;

    for _ in 0..config.epochs {
        let mut loss = 0.0f64;
        let mut pairs = 0usize;
        for doc in &encoded {
            for (pos, &center) in doc.iter().enumerate() {
                let progress = processed as f64 / (schedule_len + 1.0);
                let alpha = (config.learning_rate * (1.0 - progress))
                    .max(config.learning_rate * 1e-4) as f32;
                processed += 1;

                let shrink = rng.gen_range(0..config.window);
                let effective = config.window - shrink;
                let lo = pos.saturating_sub(effective);
                let hi = (pos + effective).min(doc.len() - 1);
                for context_pos in lo..=hi {
                    if context_pos == pos {
                        continue;
                    }
                    let target = doc[context_pos];
                    neu1e.iter_mut().for_each(|v| *v = 0.0);

                    // Positive pair plus negative samples; label 1 then 0s.
                    for sample in 0..=config.negatives {
                        let (word, label) = if sample == 0 {
                            (target, 1.0f32)
                        } else {
                            match draw_negative(&mut rng, &cumulative, total_mass, target) {
                                Some(w) => (w, 0.0),
                                None => continue,
                            }
                        };
                        let in_row = &input[center * dim..(center + 1) * dim];
                        let out_row = &mut output[word * dim..(word + 1) * dim];
                        let f: f32 = in_row
                            .iter()
                            .zip(out_row.iter())
                            .map(|(a, b)| a * b)
                            .sum();
                        let g = (label - sigmoid(f)) * alpha;
                        for d in 0..dim {
                            neu1e[d] += g * out_row[d];
                        }
                        for d in 0..dim {
                            out_row[d] += g * in_row[d];
                        }
                        let signed = if label > 0.5 { f } else { -f };
                        loss -= log_sigmoid(f64::from(signed));
                    }
                    let in_row = &mut input[center * dim..(center + 1) * dim];
                    for d in 0..dim {
                        in_row[d] += neu1e[d];
                    }
                    pairs += 1;
                }
            }
        }
        epoch_losses.push(if pairs == 0 { 0.0 } else { loss / pairs as f64 });
    }

    Ok((
        EmbeddingTable {
            tokens,
            index,
            matrix: input,
            dim,
            config,
        },
        epoch_losses,
    ))
}

/// Sample one vocabulary index from the unigram^(3/4) distribution,
/// rejecting the positive target. `None` when no distinct word exists.
fn draw_negative(
    rng: &mut ChaCha8Rng,
    cumulative: &[f64],
    total_mass: f64,
    target: usize,
) -> Option<usize> {
    if cumulative.len() < 2 {
        return None;
    }
    for _ in 0..1000 {
        let r = rng.gen::<f64>() * total_mass;
        let word = cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1);
        if word != target {
            return Some(word);
        }
    }
    None
}

fn sigmoid(x: f32) -> f32 {
    (1.0 / (1.0 + f64::from(-x).exp())) as f32
}

/// ln σ(x), stable for large negative x.
fn log_sigmoid(x: f64) -> f64 {
    if x < -30.0 {
        x
    } else {
        -(-x).exp().ln_1p()
    }
}

/// Mean of the embeddings of in-vocabulary tokens; all-OOV or empty input
/// yields the zero vector.
///
/// Tokens are counted first and accumulated in vocabulary-index order, so
/// the result is bitwise identical under any permutation of the input.
pub fn doc_vector(tokens: &[String], table: &EmbeddingTable) -> Vec<f64> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for token in tokens {
        if let Some(i) = table.token_index(token) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    let mut acc = vec![0.0f64; table.dim()];
    let total: usize = counts.values().sum();
    if total == 0 {
        return acc;
    }
    for (&i, &count) in &counts {
        let row = table.vector_at(i);
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += count as f64 * f64::from(v);
        }
    }
    for a in &mut acc {
        *a /= total as f64;
    }
    acc
}

fn sentiment_lexicon() -> &'static HashMap<&'static str, f64> {
    static MAP: OnceLock<HashMap<&'static str, f64>> = OnceLock::new();
    MAP.get_or_init(|| {
        SENTIMENT_LEXICON_RAW
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| {
                let mut parts = l.split_whitespace();
                let token = parts.next()?;
                let score: f64 = parts.next()?.parse().ok()?;
                Some((token, score))
            })
            .collect()
    })
}

const NEGATORS: [&str; 3] = ["not", "no", "never"];

/// Mean sentiment-lexicon score over matched tokens, in [−1, 1].
///
/// A matched token immediately preceded by a negator (`not`, `no`, `never`,
/// or any `n't` contraction) contributes with flipped sign. Texts with no
/// lexicon match score 0.0.
pub fn polarity(text: &str) -> f64 {
    let lexicon = sentiment_lexicon();
    let mut sum = 0.0;
    let mut matched = 0usize;
    let mut previous: Option<String> = None;
    for token in text.split(|c: char| !(c.is_alphanumeric() || c == '\'')) {
        if token.is_empty() {
            continue;
        }
        let token = token.to_lowercase();
        if let Some(&score) = lexicon.get(token.as_str()) {
            let negated = previous
                .as_deref()
                .is_some_and(|p| NEGATORS.contains(&p) || p.ends_with("n't"));
            sum += if negated { -score } else { score };
            matched += 1;
        }
        previous = Some(token);
    }
    if matched == 0 {
        0.0
    } else {
        sum / matched as f64
    }
}

/// Python-style `isupper`: at least one cased character and no lowercase.
fn is_upper_word(word: &str) -> bool {
    let mut cased = false;
    for ch in word.chars() {
        if ch.is_lowercase() {
            return false;
        }
        if ch.is_uppercase() {
            cased = true;
        }
    }
    cased
}

/// Python-style `istitle`: every cased run starts uppercase and continues
/// lowercase.
fn is_title_word(word: &str) -> bool {
    let mut previous_cased = false;
    let mut found = false;
    for ch in word.chars() {
        if ch.is_uppercase() {
            if previous_cased {
                return false;
            }
            previous_cased = true;
            found = true;
        } else if ch.is_lowercase() {
            if !previous_cased {
                return false;
            }
            previous_cased = true;
            found = true;
        } else {
            previous_cased = false;
        }
    }
    found
}

const ASCII_PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

/// Index of each statistic in the [`text_stats`] output.
pub const TEXT_STAT_NAMES: [&str; 8] = [
    "punctuation_count",
    "word_count",
    "stopword_count",
    "letter_count",
    "unique_word_count",
    "mean_word_length",
    "uppercase_word_count",
    "title_word_count",
];

/// Eight surface statistics of the raw (uncleaned) text, in the
/// [`TEXT_STAT_NAMES`] order. Words are whitespace-split; the stopword and
/// unique counts use lowercased words with surrounding punctuation trimmed;
/// word length counts alphanumeric characters only.
pub fn text_stats(raw: &str) -> [f64; 8] {
    let punctuation = raw
        .chars()
        .filter(|c| ASCII_PUNCTUATION.contains(*c))
        .count();
    let letters = raw.chars().filter(|c| c.is_alphabetic()).count();

    let words: Vec<&str> = raw.split_whitespace().collect();
    let mut stopword_count = 0usize;
    let mut unique: HashSet<String> = HashSet::new();
    let mut length_sum = 0usize;
    let mut uppercase = 0usize;
    let mut title = 0usize;
    for word in &words {
        let bare = word
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        if !bare.is_empty() {
            if stopwords().contains(bare.as_str()) {
                stopword_count += 1;
            }
            unique.insert(bare);
        }
        length_sum += word.chars().filter(|c| c.is_alphanumeric()).count();
        if is_upper_word(word) {
            uppercase += 1;
        }
        if is_title_word(word) {
            title += 1;
        }
    }
    let mean_length = if words.is_empty() {
        0.0
    } else {
        length_sum as f64 / words.len() as f64
    };

    [
        punctuation as f64,
        words.len() as f64,
        stopword_count as f64,
        letters as f64,
        unique.len() as f64,
        mean_length,
        uppercase as f64,
        title as f64,
    ]
}

/// Condition-name → integer code mapping fitted on training data.
/// Codes follow lexicographic order; unseen conditions map to the reserved
/// code `len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEncoder {
    codes: BTreeMap<String, usize>,
}

impl ConditionEncoder {
    pub fn fit<'a, I: IntoIterator<Item = &'a str>>(conditions: I) -> Self {
        let unique: std::collections::BTreeSet<&str> = conditions.into_iter().collect();
        let codes = unique
            .into_iter()
            .enumerate()
            .map(|(i, c)| (c.to_string(), i))
            .collect();
        ConditionEncoder { codes }
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Code reserved for conditions absent from the training data.
    pub fn unseen_code(&self) -> usize {
        self.codes.len()
    }

    pub fn encode(&self, condition: &str) -> usize {
        self.codes
            .get(condition)
            .copied()
            .unwrap_or_else(|| self.unseen_code())
    }
}

/// Width of the manual feature vector.
pub const MANUAL_FEATURE_DIM: usize = 15;

/// The 15 hand-crafted features, in fixed order: useful count, condition
/// code, day, month, year, polarity of the cleaned review, polarity of the
/// raw review, then the eight [`text_stats`] of the raw review.
pub fn manual_features(record: &ReviewRecord, encoder: &ConditionEncoder) -> Vec<f64> {
    let code = record
        .condition
        .as_deref()
        .map_or_else(|| encoder.unseen_code(), |c| encoder.encode(c));
    let mut features = Vec::with_capacity(MANUAL_FEATURE_DIM);
    features.push(f64::from(record.useful_count));
    features.push(code as f64);
    features.push(f64::from(record.date.day()));
    features.push(f64::from(record.date.month()));
    features.push(f64::from(record.date.year()));
    features.push(polarity(&clean_text(&record.review_text)));
    features.push(polarity(&record.review_text));
    features.extend(text_stats(&record.review_text));
    features
}
