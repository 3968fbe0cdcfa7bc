//! Text normalization: cleaning, tokenization, stopword removal, and
//! rule-based lemmatization.
//!
//! The full chain joins a record's condition, drug name, and review into one
//! string, cleans it (tags, URLs, punctuation, case), splits on whitespace,
//! drops stopwords, and maps each token to a base form. The stopword list
//! and the lemmatizer's irregular-form table ship as embedded data files so
//! the outputs are pinned.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::ReviewRecord;

static STOPWORDS_RAW: &str = include_str!("../data/stopwords.txt");
static LEMMA_EXCEPTIONS_RAW: &str = include_str!("../data/lemma_exceptions.txt");

/// The embedded stopword list (about 160 common English function words,
/// including contraction fragments like `don` and `t` that survive
/// punctuation stripping).
pub fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_RAW
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

fn lemma_exceptions() -> &'static HashMap<&'static str, &'static str> {
    static MAP: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    MAP.get_or_init(|| {
        LEMMA_EXCEPTIONS_RAW
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| {
                let mut parts = l.split_whitespace();
                Some((parts.next()?, parts.next()?))
            })
            .collect()
    })
}

fn tag_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<[^>]*>").expect("valid regex"))
}

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(?:[a-z][a-z0-9+.-]*://|www\.)[^\s<>]*").expect("valid regex")
    })
}

/// Normalize raw text: strip HTML tags and URLs, replace every character
/// that is neither alphanumeric nor whitespace with a space, lowercase, and
/// collapse whitespace runs. Total and idempotent.
pub fn clean_text(raw: &str) -> String {
    let no_tags = tag_regex().replace_all(raw, " ");
    let no_urls = url_regex().replace_all(&no_tags, " ");
    let mut out = String::with_capacity(no_urls.len());
    let mut pending_space = false;
    for ch in no_urls.chars() {
        if ch.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.extend(ch.to_lowercase());
        } else {
            pending_space = true;
        }
    }
    out
}

/// Split cleaned text on whitespace, preserving order.
pub fn tokenize(cleaned: &str) -> Vec<String> {
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// Drop tokens present in the embedded stopword list, preserving order.
pub fn remove_stopwords(mut tokens: Vec<String>) -> Vec<String> {
    tokens.retain(|t| !stopwords().contains(t.as_str()));
    tokens
}

/// Map every token to its base form. See [`lemmatize_token`].
pub fn lemmatize(tokens: Vec<String>) -> Vec<String> {
    tokens.into_iter().map(|t| lemmatize_token(&t)).collect()
}

/// Reduce one lowercase token to a base form.
///
/// The irregular-form table is consulted first (`feet` → `foot`; identity
/// entries pin words the rules would mangle, like `cancer`). Otherwise
/// suffix rules for plurals, `-ed`, `-ing`, and `-er` apply repeatedly until
/// a fixed point: outputs are always fixed points of this function. The
/// rules approximate dictionary lemmas; they do not consult one.
pub fn lemmatize_token(token: &str) -> String {
    let mut current = token.to_string();
    // One rule fires per round; 8 rounds cover any stackable suffix chain.
    for _ in 0..8 {
        if let Some(&lemma) = lemma_exceptions().get(current.as_str()) {
            return lemma.to_string();
        }
        match apply_suffix_rule(&current) {
            Some(next) if next != current => current = next,
            _ => return current,
        }
    }
    current
}

fn apply_suffix_rule(token: &str) -> Option<String> {
    if !token.is_ascii() {
        return None;
    }
    let n = token.len();

    // Plurals.
    if token.ends_with("sses") {
        return Some(token[..n - 2].to_string());
    }
    if token.ends_with("ies") && n >= 5 {
        return Some(format!("{}y", &token[..n - 3]));
    }
    if n >= 5 && ["ches", "shes", "xes", "zzes"].iter().any(|s| token.ends_with(s)) {
        return Some(token[..n - 2].to_string());
    }
    if token.ends_with('s')
        && n >= 4
        && !token.ends_with("ss")
        && !token.ends_with("us")
        && !token.ends_with("is")
    {
        return Some(token[..n - 1].to_string());
    }

    // Past tense.
    if token.ends_with("ed") && n >= 5 && has_vowel(&token[..n - 2]) {
        let stem = &token[..n - 2];
        if let Some(base) = stem.strip_suffix('i') {
            return Some(format!("{base}y"));
        }
        return Some(restore_stem(stem.to_string()));
    }

    // Progressive.
    if token.ends_with("ing") && n > 5 {
        let stem = &token[..n - 3];
        if stem.len() >= 3 && has_vowel(stem) {
            return Some(restore_stem(stem.to_string()));
        }
    }

    // Comparatives and agent nouns.
    if token.ends_with("ier") && n >= 6 {
        return Some(format!("{}y", &token[..n - 3]));
    }
    if token.ends_with("er") && n >= 6 && has_vowel(&token[..n - 2]) {
        return Some(restore_stem(token[..n - 2].to_string()));
    }

    None
}

/// Repair a stem after suffix removal: `relat` → `relate`, `stopp` → `stop`,
/// `tak` → `take`.
fn restore_stem(mut stem: String) -> String {
    if stem.ends_with("at") || stem.ends_with("bl") || stem.ends_with("iz") {
        stem.push('e');
    } else if ends_double_consonant(&stem) && !stem.ends_with(['l', 's', 'z']) {
        stem.pop();
    } else if measure(&stem) == 1 && ends_cvc(&stem) {
        stem.push('e');
    }
    stem
}

fn is_vowel_at(bytes: &[u8], i: usize) -> bool {
    match bytes[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => true,
        b'y' => i > 0 && !is_vowel_at(bytes, i - 1),
        _ => false,
    }
}

fn has_vowel(stem: &str) -> bool {
    let bytes = stem.as_bytes();
    (0..bytes.len()).any(|i| is_vowel_at(bytes, i))
}

/// Number of vowel→consonant transitions (Porter's `m`).
fn measure(stem: &str) -> usize {
    let bytes = stem.as_bytes();
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..bytes.len() {
        let v = is_vowel_at(bytes, i);
        if prev_vowel && !v {
            m += 1;
        }
        prev_vowel = v;
    }
    m
}

fn ends_double_consonant(stem: &str) -> bool {
    let bytes = stem.as_bytes();
    let n = bytes.len();
    n >= 2 && bytes[n - 1] == bytes[n - 2] && !is_vowel_at(bytes, n - 1)
}

/// Consonant-vowel-consonant ending where the final consonant is not w, x,
/// or y; marks short stems that dropped a final `e`.
fn ends_cvc(stem: &str) -> bool {
    let bytes = stem.as_bytes();
    let n = bytes.len();
    n >= 3
        && !is_vowel_at(bytes, n - 3)
        && is_vowel_at(bytes, n - 2)
        && !is_vowel_at(bytes, n - 1)
        && !matches!(bytes[n - 1], b'w' | b'x' | b'y')
}

/// A review after the full preprocessing chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedDoc {
    pub record_id: u64,
    /// Original review text, untouched.
    pub raw_text: String,
    /// Condition, drug name, and review joined with single spaces.
    pub combined_text: String,
    /// `combined_text` after [`clean_text`].
    pub cleaned_text: String,
    /// Final token sequence: cleaned, stopword-free, lemmatized.
    pub tokens: Vec<String>,
}

/// Run the whole chain on one record.
///
/// The condition and drug name are prepended to the review because they
/// carry predictive signal of their own. Lemmatization can surface new
/// stopwords (`better` → `good` is fine, but irregular maps can land on
/// listed words), so stopword removal runs once more at the end to keep the
/// token invariant unconditional.
pub fn preprocess_review(record: &ReviewRecord) -> ProcessedDoc {
    let combined_text = format!(
        "{} {} {}",
        record.condition.as_deref().unwrap_or(""),
        record.drug_name,
        record.review_text
    );
    let cleaned_text = clean_text(&combined_text);
    let tokens = remove_stopwords(lemmatize(remove_stopwords(tokenize(&cleaned_text))));
    ProcessedDoc {
        record_id: record.unique_id,
        raw_text: record.review_text.clone(),
        combined_text,
        cleaned_text,
        tokens,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    #[test]
    fn clean_text_strips_punctuation_and_lowercases() {
        assert_eq!(clean_text("It Worked!!"), "it worked");
    }

    #[test]
    fn clean_text_strips_tags_and_urls() {
        assert_eq!(
            clean_text("see <b>this</b> at http://x.co now"),
            "see this at now"
        );
        assert_eq!(clean_text("go to www.example.com/page?q=1 ok"), "go to ok");
    }

    #[test]
    fn clean_text_handles_empty_and_is_idempotent() {
        assert_eq!(clean_text(""), "");
        for raw in [
            "It Worked!!",
            "see <b>this</b> at http://x.co now",
            "A&B -- \"quoted\" text... 10mg!",
            "  spaced\tout\ntext  ",
        ] {
            let once = clean_text(raw);
            assert_eq!(clean_text(&once), once);
        }
    }

    #[test]
    fn clean_text_keeps_numerals() {
        assert_eq!(clean_text("took 10mg twice"), "took 10mg twice");
    }

    #[test]
    fn tokenize_splits_on_whitespace() {
        assert_eq!(tokenize("it worked"), vec!["it", "worked"]);
        assert_eq!(tokenize(""), Vec::<String>::new());
        assert_eq!(tokenize("a  b"), vec!["a", "b"]);
    }

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn remove_stopwords_drops_listed_words() {
        assert_eq!(remove_stopwords(toks(&["we", "all", "went"])), toks(&["went"]));
        assert_eq!(remove_stopwords(toks(&["drug"])), toks(&["drug"]));
        assert_eq!(remove_stopwords(Vec::new()), Vec::<String>::new());
    }

    #[test]
    fn stopword_list_covers_canonical_words() {
        for w in ["a", "to", "all", "we", "with", "very", "ours", "yours"] {
            assert!(stopwords().contains(w), "missing stopword {w}");
        }
        assert!(!stopwords().contains("good"));
    }

    #[test]
    fn remove_stopwords_is_idempotent() {
        let once = remove_stopwords(toks(&["we", "liked", "it", "very", "much"]));
        let twice = remove_stopwords(once.clone());
        assert_eq!(once, twice);
    }

    #[test]
    fn lemmatize_canonical_examples() {
        assert_eq!(lemmatize_token("running"), "run");
        assert_eq!(lemmatize_token("feet"), "foot");
        assert_eq!(lemmatize_token("drug"), "drug");
    }

    #[test]
    fn lemmatize_suffix_rules() {
        for (input, expected) in [
            ("flies", "fly"),
            ("studies", "study"),
            ("dresses", "dress"),
            ("rashes", "rash"),
            ("churches", "church"),
            ("boxes", "box"),
            ("tablets", "tablet"),
            ("doses", "dose"),
            ("stopped", "stop"),
            ("worked", "work"),
            ("worried", "worry"),
            ("tried", "try"),
            ("related", "relate"),
            ("cured", "cure"),
            ("taking", "take"),
            ("hoping", "hope"),
            ("hopping", "hop"),
            ("swelling", "swell"),
            ("itching", "itch"),
            ("bigger", "big"),
            ("closer", "close"),
            ("stronger", "strong"),
            ("earlier", "early"),
            ("feelings", "feel"),
        ] {
            assert_eq!(lemmatize_token(input), expected, "input {input}");
        }
    }

    #[test]
    fn lemmatize_respects_exception_table() {
        for (input, expected) in [
            ("went", "go"),
            ("aches", "ache"),
            ("headaches", "headache"),
            ("cancer", "cancer"),
            ("blister", "blister"),
            ("shoulder", "shoulder"),
            ("diabetes", "diabetes"),
            ("nothing", "nothing"),
            ("suffered", "suffer"),
        ] {
            assert_eq!(lemmatize_token(input), expected, "input {input}");
        }
    }

    #[test]
    fn lemmatize_short_words_untouched() {
        for w in ["gas", "yes", "us", "his", "die", "ache"] {
            let lemma = lemmatize_token(w);
            assert_eq!(lemma, lemmatize_token(&lemma));
        }
    }

    #[test]
    fn lemmatize_outputs_are_fixed_points() {
        let words = [
            "running", "feet", "studies", "meetings", "stopped", "happier",
            "children", "wives", "suffered", "swallowed", "pressures",
            "medications", "reactions", "improvements",
        ];
        for w in words {
            let once = lemmatize_token(w);
            assert_eq!(once, lemmatize_token(&once), "not a fixed point: {w} -> {once}");
        }
    }

    fn sample_record(condition: &str, drug: &str, review: &str) -> ReviewRecord {
        ReviewRecord {
            unique_id: 7,
            drug_name: drug.to_string(),
            condition: Some(condition.to_string()),
            review_text: review.to_string(),
            rating: 9,
            date: NaiveDate::from_ymd_opt(2012, 5, 20).unwrap(),
            useful_count: 27,
        }
    }

    #[test]
    fn preprocess_prepends_condition_and_drug() {
        let doc = preprocess_review(&sample_record("acne", "X", "It Worked!!"));
        assert_eq!(doc.combined_text, "acne X It Worked!!");
        assert_eq!(doc.cleaned_text, "acne x it worked");
        assert!(doc.tokens.contains(&"acne".to_string()));
        assert!(doc.tokens.contains(&"x".to_string()));
        assert!(doc.tokens.contains(&"work".to_string()));
    }

    #[test]
    fn preprocess_empty_review_keeps_condition_and_drug() {
        let doc = preprocess_review(&sample_record("acne", "Accutane", ""));
        assert_eq!(doc.tokens, toks(&["acne", "accutane"]));
    }

    #[test]
    fn preprocess_token_invariants() {
        let doc = preprocess_review(&sample_record(
            "Left Ventricular Dysfunction",
            "Valsartan",
            "We all went to www.site.com and it <b>really</b> helped; I'm better!!",
        ));
        assert!(!doc.tokens.is_empty());
        for token in &doc.tokens {
            assert!(!token.is_empty());
            assert!(!token.chars().any(char::is_whitespace), "whitespace in {token:?}");
            assert!(!token.chars().any(char::is_uppercase), "uppercase in {token:?}");
            assert!(!stopwords().contains(token.as_str()), "stopword {token:?} survived");
        }
        assert!(!doc.cleaned_text.contains('<'));
        assert!(!doc.cleaned_text.contains("www"));
    }

    #[test]
    fn preprocess_is_deterministic() {
        let record = sample_record("acne", "X", "It helped my skin a lot!");
        assert_eq!(preprocess_review(&record), preprocess_review(&record));
    }
}
