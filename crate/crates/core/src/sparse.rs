//! N-gram vocabularies and sparse bag-of-words / TF-IDF vectors.
//!
//! Term weighting: `tf = ln(1 + count)`, `idf = ln(N / df)`, weight =
//! `tf · idf`. Natural log throughout, no smoothing, no row normalization.
//! Vocabulary indices are assigned in lexicographic gram order, so fitting
//! the same corpus always yields the same layout.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Separator between tokens of one n-gram. Tokens never contain whitespace,
/// so a space cannot collide with token content.
pub const NGRAM_SEPARATOR: char = ' ';

/// A sorted sparse vector; zero weights are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
    dim: usize,
}

impl SparseVector {
    /// Build from entries, validating the representation invariants:
    /// strictly increasing indices, all below `dim`, no zero weights.
    pub fn new(entries: Vec<(usize, f64)>, dim: usize) -> Result<Self> {
        for window in entries.windows(2) {
            if window[0].0 >= window[1].0 {
                return Err(Error::InvalidInput(format!(
                    "sparse indices not strictly increasing: {} then {}",
                    window[0].0, window[1].0
                )));
            }
        }
        for &(index, weight) in &entries {
            if index >= dim {
                return Err(Error::InvalidInput(format!(
                    "sparse index {index} out of dimension {dim}"
                )));
            }
            if weight == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "zero weight stored at index {index}"
                )));
            }
            if !weight.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite weight at index {index}"
                )));
            }
        }
        Ok(SparseVector { entries, dim })
    }

    pub fn empty(dim: usize) -> Self {
        SparseVector {
            entries: Vec::new(),
            dim,
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Weight at `index`, 0.0 if absent.
    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |e| e.0) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Squared Euclidean distance via a merge walk over both entry lists.
    pub fn squared_distance(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut total = 0.0;
        while i < self.entries.len() && j < other.entries.len() {
            let (ia, va) = self.entries[i];
            let (ib, vb) = other.entries[j];
            match ia.cmp(&ib) {
                std::cmp::Ordering::Less => {
                    total += va * va;
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    total += vb * vb;
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let d = va - vb;
                    total += d * d;
                    i += 1;
                    j += 1;
                }
            }
        }
        for &(_, v) in &self.entries[i..] {
            total += v * v;
        }
        for &(_, v) in &other.entries[j..] {
            total += v * v;
        }
        total
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(index, weight) in &self.entries {
            out[index] = weight;
        }
        out
    }
}

/// Index and document frequency of one vocabulary gram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GramInfo {
    pub index: usize,
    pub df: usize,
}

/// A fitted n-gram vocabulary. Gram order (BTreeMap) coincides with index
/// order because indices are assigned lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    grams: BTreeMap<String, GramInfo>,
    ngram_range: (usize, usize),
    n_docs: usize,
    min_df: usize,
}

/// All contiguous n-grams for n in `low..=high`, grouped by n and in
/// position order within each n. Multi-token grams are joined with
/// [`NGRAM_SEPARATOR`].
pub fn extract_ngrams(tokens: &[String], range: (usize, usize)) -> Vec<String> {
    let (low, high) = range;
    assert!(
        1 <= low && low <= high,
        "n-gram range must satisfy 1 <= low <= high, got ({low}, {high})"
    );
    let mut grams = Vec::new();
    for n in low..=high {
        if n > tokens.len() {
            break;
        }
        for window in tokens.windows(n) {
            let mut gram = String::with_capacity(n * 8);
            for (k, token) in window.iter().enumerate() {
                if k > 0 {
                    gram.push(NGRAM_SEPARATOR);
                }
                gram.push_str(token);
            }
            grams.push(gram);
        }
    }
    grams
}

impl Vocabulary {
    /// Fit over tokenized training documents: count per-gram document
    /// frequency, keep grams with df ≥ `min_df`, assign indices in
    /// lexicographic order.
    pub fn fit(docs: &[Vec<String>], ngram_range: (usize, usize), min_df: usize) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::InvalidInput(
                "cannot fit a vocabulary on an empty corpus".into(),
            ));
        }
        let (low, high) = ngram_range;
        if !(1 <= low && low <= high) {
            return Err(Error::InvalidInput(format!(
                "n-gram range ({low}, {high}) must satisfy 1 <= low <= high"
            )));
        }
        if min_df == 0 {
            return Err(Error::InvalidInput("min_df must be at least 1".into()));
        }

        let mut df: HashMap<String, usize> = HashMap::new();
        for doc in docs {
            let mut seen: HashSet<String> = HashSet::new();
            for gram in extract_ngrams(doc, ngram_range) {
                seen.insert(gram);
            }
            for gram in seen {
                *df.entry(gram).or_insert(0) += 1;
            }
        }

        let mut grams: BTreeMap<String, GramInfo> = df
            .into_iter()
            .filter(|&(_, df)| df >= min_df)
            .map(|(gram, df)| (gram, GramInfo { index: 0, df }))
            .collect();
        for (index, info) in grams.values_mut().enumerate() {
            info.index = index;
        }

        Ok(Vocabulary {
            grams,
            ngram_range,
            n_docs: docs.len(),
            min_df,
        })
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn ngram_range(&self) -> (usize, usize) {
        self.ngram_range
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    pub fn info(&self, gram: &str) -> Option<GramInfo> {
        self.grams.get(gram).copied()
    }

    /// Iterate grams in index order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, GramInfo)> {
        self.grams.iter().map(|(g, &info)| (g.as_str(), info))
    }

    /// Raw-count bag-of-words vector for one document. Out-of-vocabulary
    /// grams are ignored.
    pub fn bow_transform(&self, tokens: &[String]) -> SparseVector {
        let mut counts: HashMap<usize, u64> = HashMap::new();
        for gram in extract_ngrams(tokens, self.ngram_range) {
            if let Some(info) = self.grams.get(&gram) {
                *counts.entry(info.index).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(index, count)| (index, count as f64))
            .collect();
        entries.sort_unstable_by_key(|e| e.0);
        SparseVector {
            entries,
            dim: self.grams.len(),
        }
    }
}

/// Log-scaled term frequency: `ln(1 + count)`.
pub fn tf(count: u64) -> f64 {
    (1.0 + count as f64).ln()
}

/// Inverse document frequency of a vocabulary gram: `ln(N / df)`.
/// Grams outside the vocabulary are an error; transform paths skip them
/// before calling.
pub fn idf(gram: &str, vocab: &Vocabulary) -> Result<f64> {
    let info = vocab
        .info(gram)
        .ok_or_else(|| Error::UnknownGram(gram.to_string()))?;
    Ok((vocab.n_docs() as f64 / info.df as f64).ln())
}

/// A vocabulary plus its per-gram IDF weights, indexed by gram index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    vocabulary: Vocabulary,
    idf_weights: Vec<f64>,
}

impl TfIdfModel {
    /// Fit vocabulary and IDF table in one pass over training documents.
    pub fn fit(docs: &[Vec<String>], ngram_range: (usize, usize), min_df: usize) -> Result<Self> {
        Ok(Self::from_vocabulary(Vocabulary::fit(docs, ngram_range, min_df)?))
    }

    pub fn from_vocabulary(vocabulary: Vocabulary) -> Self {
        let n = vocabulary.n_docs() as f64;
        let mut idf_weights = vec![0.0; vocabulary.len()];
        for (_, info) in vocabulary.iter() {
            idf_weights[info.index] = (n / info.df as f64).ln();
        }
        TfIdfModel {
            vocabulary,
            idf_weights,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn idf_weights(&self) -> &[f64] {
        &self.idf_weights
    }

    /// TF-IDF vector for one document: `ln(1+count) · idf` per in-vocabulary
    /// gram. Grams with zero IDF produce zero weights and are omitted.
    pub fn transform(&self, tokens: &[String]) -> SparseVector {
        let mut counts: HashMap<usize, u64> = HashMap::new();
        for gram in extract_ngrams(tokens, self.vocabulary.ngram_range()) {
            if let Some(info) = self.vocabulary.info(&gram) {
                *counts.entry(info.index).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .filter_map(|(index, count)| {
                let weight = tf(count) * self.idf_weights[index];
                (weight != 0.0).then_some((index, weight))
            })
            .collect();
        entries.sort_unstable_by_key(|e| e.0);
        SparseVector {
            entries,
            dim: self.vocabulary.len(),
        }
    }

    /// Persist as JSON: header fields plus one (gram, index, df, idf) row
    /// per vocabulary entry, in index order.
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = VocabularyFile::from_model(self);
        let writer = BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(writer, &file)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let file: VocabularyFile = serde_json::from_reader(reader)?;
        file.into_model()
    }
}

/// On-disk shape of a fitted vocabulary with IDF weights.
#[derive(Debug, Serialize, Deserialize)]
struct VocabularyFile {
    ngram_range: (usize, usize),
    n_docs: usize,
    min_df: usize,
    grams: Vec<VocabularyRow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VocabularyRow {
    gram: String,
    index: usize,
    df: usize,
    idf: f64,
}

impl VocabularyFile {
    fn from_model(model: &TfIdfModel) -> Self {
        let grams = model
            .vocabulary
            .iter()
            .map(|(gram, info)| VocabularyRow {
                gram: gram.to_string(),
                index: info.index,
                df: info.df,
                idf: model.idf_weights[info.index],
            })
            .collect();
        VocabularyFile {
            ngram_range: model.vocabulary.ngram_range(),
            n_docs: model.vocabulary.n_docs(),
            min_df: model.vocabulary.min_df(),
            grams,
        }
    }

    fn into_model(self) -> Result<TfIdfModel> {
        let mut grams = BTreeMap::new();
        let mut idf_weights = vec![0.0; self.grams.len()];
        for row in self.grams {
            if row.index >= idf_weights.len() {
                return Err(Error::Parse(format!(
                    "vocabulary row index {} out of range",
                    row.index
                )));
            }
            idf_weights[row.index] = row.idf;
            grams.insert(
                row.gram,
                GramInfo {
                    index: row.index,
                    df: row.df,
                },
            );
        }
        if grams.len() != idf_weights.len() {
            return Err(Error::Parse("duplicate gram in vocabulary file".into()));
        }
        Ok(TfIdfModel {
            vocabulary: Vocabulary {
                grams,
                ngram_range: self.ngram_range,
                n_docs: self.n_docs,
                min_df: self.min_df,
            },
            idf_weights,
        })
    }
}

/// Write sparse rows in coordinate text format: a `rows cols nnz` header
/// line, then one `row col value` line per entry, row-major.
pub fn write_coo<W: Write>(mut out: W, rows: &[SparseVector]) -> Result<()> {
    let dim = rows.first().map_or(0, SparseVector::dim);
    let nnz: usize = rows.iter().map(SparseVector::nnz).sum();
    writeln!(out, "{} {} {}", rows.len(), dim, nnz)?;
    for (r, vector) in rows.iter().enumerate() {
        for &(c, value) in vector.entries() {
            writeln!(out, "{r} {c} {value}")?;
        }
    }
    Ok(())
}

/// Read the coordinate text format written by [`write_coo`].
pub fn read_coo<R: BufRead>(input: R) -> Result<Vec<SparseVector>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty coordinate file".into()))??;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|f| f.parse().map_err(|_| Error::Parse(format!("bad header field {f:?}"))))
        .collect::<Result<_>>()?;
    let [n_rows, dim, nnz] = dims[..] else {
        return Err(Error::Parse("coordinate header needs rows cols nnz".into()));
    };

    let mut entries_per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
    let mut seen = 0usize;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(r), Some(c), Some(v)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse(format!("bad coordinate line {line:?}")));
        };
        let r: usize = r.parse().map_err(|_| Error::Parse(format!("bad row {r:?}")))?;
        let c: usize = c.parse().map_err(|_| Error::Parse(format!("bad col {c:?}")))?;
        let v: f64 = v.parse().map_err(|_| Error::Parse(format!("bad value {v:?}")))?;
        if r >= n_rows {
            return Err(Error::Parse(format!("row {r} out of range")));
        }
        entries_per_row[r].push((c, v));
        seen += 1;
    }
    if seen != nnz {
        return Err(Error::Parse(format!(
            "coordinate file declared {nnz} entries, found {seen}"
        )));
    }
    entries_per_row
        .into_iter()
        .map(|mut entries| {
            entries.sort_unstable_by_key(|e| e.0);
            SparseVector::new(entries, dim)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn ngrams_unigram_bigram_order() {
        assert_eq!(
            extract_ngrams(&toks(&["a", "b", "c"]), (1, 2)),
            toks(&["a", "b", "c", "a b", "b c"])
        );
    }

    #[test]
    fn ngrams_short_doc_and_trigram() {
        assert_eq!(extract_ngrams(&toks(&["a"]), (1, 2)), toks(&["a"]));
        assert_eq!(extract_ngrams(&toks(&["a", "b", "c"]), (3, 3)), toks(&["a b c"]));
        assert_eq!(extract_ngrams(&[], (1, 2)), Vec::<String>::new());
    }

    #[test]
    fn fit_counts_document_frequency() {
        let docs = vec![toks(&["a", "b"]), toks(&["b"])];
        let vocab = Vocabulary::fit(&docs, (1, 1), 1).unwrap();
        assert_eq!(vocab.n_docs(), 2);
        assert_eq!(vocab.info("a"), Some(GramInfo { index: 0, df: 1 }));
        assert_eq!(vocab.info("b"), Some(GramInfo { index: 1, df: 2 }));
    }

    #[test]
    fn fit_min_df_threshold() {
        let docs = vec![toks(&["a", "b"]), toks(&["b"])];
        let vocab = Vocabulary::fit(&docs, (1, 1), 2).unwrap();
        assert_eq!(vocab.len(), 1);
        assert_eq!(vocab.info("b"), Some(GramInfo { index: 0, df: 2 }));
        assert_eq!(vocab.info("a"), None);
    }

    #[test]
    fn fit_is_deterministic_and_indices_bijective() {
        let docs = vec![
            toks(&["c", "a", "b", "a"]),
            toks(&["b", "d"]),
            toks(&["e", "a"]),
        ];
        let v1 = Vocabulary::fit(&docs, (1, 2), 1).unwrap();
        let v2 = Vocabulary::fit(&docs, (1, 2), 1).unwrap();
        assert_eq!(v1, v2);

        let mut indices: Vec<usize> = v1.iter().map(|(_, info)| info.index).collect();
        indices.sort_unstable();
        assert_eq!(indices, (0..v1.len()).collect::<Vec<_>>());
        for (_, info) in v1.iter() {
            assert!(info.df >= 1 && info.df <= v1.n_docs());
        }
    }

    #[test]
    fn fit_rejects_empty_corpus() {
        assert!(Vocabulary::fit(&[], (1, 2), 1).is_err());
    }

    #[test]
    fn bow_counts_grams() {
        let docs = vec![toks(&["a", "b"]), toks(&["b"])];
        let vocab = Vocabulary::fit(&docs, (1, 1), 1).unwrap();
        let v = vocab.bow_transform(&toks(&["b", "b", "a"]));
        // counts: a once -> index 0, b twice -> index 1
        assert_eq!(v.entries(), &[(0, 1.0), (1, 2.0)]);
        assert_eq!(v.dim(), 2);
    }

    #[test]
    fn bow_unseen_and_empty_docs_are_empty_vectors() {
        let docs = vec![toks(&["a"])];
        let vocab = Vocabulary::fit(&docs, (1, 1), 1).unwrap();
        assert_eq!(vocab.bow_transform(&toks(&["z", "q"])).nnz(), 0);
        assert_eq!(vocab.bow_transform(&[]).nnz(), 0);
    }

    #[test]
    fn tf_is_natural_log_of_one_plus_count() {
        assert_eq!(tf(0), 0.0);
        assert!((tf(1) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((tf(9) - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn idf_is_natural_log_of_n_over_df() {
        let docs = vec![
            toks(&["a", "b"]),
            toks(&["a"]),
            toks(&["a", "c"]),
            toks(&["a"]),
        ];
        let vocab = Vocabulary::fit(&docs, (1, 1), 1).unwrap();
        assert!((idf("a", &vocab).unwrap() - 0.0).abs() < 1e-12);
        assert!((idf("b", &vocab).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!(matches!(idf("zzz", &vocab), Err(Error::UnknownGram(_))));
    }

    #[test]
    fn tfidf_three_doc_corpus_oracle() {
        // Corpus {[a,b],[a],[a,c]}: df(a)=3, df(b)=df(c)=1, N=3.
        let docs = vec![toks(&["a", "b"]), toks(&["a"]), toks(&["a", "c"])];
        let model = TfIdfModel::fit(&docs, (1, 1), 1).unwrap();
        let v = model.transform(&toks(&["a", "b"]));
        // a appears in every doc: idf 0, omitted. b: ln(1+1) * ln(3/1).
        let expected = std::f64::consts::LN_2 * 3f64.ln();
        assert_eq!(v.entries().len(), 1);
        let (index, weight) = v.entries()[0];
        assert_eq!(index, model.vocabulary().info("b").unwrap().index);
        assert!((weight - expected).abs() < 1e-9, "weight {weight} vs {expected}");
    }

    #[test]
    fn tfidf_weight_is_tf_times_idf() {
        // One doc of four with the gram: count 1 gives ln 2 * ln 4.
        let docs = vec![toks(&["x"]), toks(&["y"]), toks(&["z"]), toks(&["w"])];
        let model = TfIdfModel::fit(&docs, (1, 1), 1).unwrap();
        let v = model.transform(&toks(&["x"]));
        let expected = std::f64::consts::LN_2 * 4f64.ln();
        assert!((v.entries()[0].1 - expected).abs() < 1e-9);
        assert!((expected - 0.9609).abs() < 1e-4);
    }

    #[test]
    fn tfidf_empty_doc_is_empty_vector() {
        let docs = vec![toks(&["a", "b"]), toks(&["a"])];
        let model = TfIdfModel::fit(&docs, (1, 1), 1).unwrap();
        assert_eq!(model.transform(&[]).nnz(), 0);
    }

    #[test]
    fn tfidf_ubiquitous_gram_always_zero() {
        let docs = vec![toks(&["a", "b"]), toks(&["a"]), toks(&["a", "a", "c"])];
        let model = TfIdfModel::fit(&docs, (1, 1), 1).unwrap();
        // Even with a high count, a df = N gram carries zero weight.
        let v = model.transform(&toks(&["a", "a", "a", "a", "a"]));
        assert_eq!(v.get(model.vocabulary().info("a").unwrap().index), 0.0);
    }

    #[test]
    fn sparse_vector_validation() {
        assert!(SparseVector::new(vec![(0, 1.0), (2, 3.0)], 5).is_ok());
        assert!(SparseVector::new(vec![(2, 1.0), (0, 3.0)], 5).is_err());
        assert!(SparseVector::new(vec![(1, 1.0), (1, 2.0)], 5).is_err());
        assert!(SparseVector::new(vec![(9, 1.0)], 5).is_err());
        assert!(SparseVector::new(vec![(0, 0.0)], 5).is_err());
    }

    #[test]
    fn sparse_distance_matches_dense() {
        let a = SparseVector::new(vec![(0, 1.0), (3, 2.0)], 5).unwrap();
        let b = SparseVector::new(vec![(1, 1.0), (3, 5.0)], 5).unwrap();
        let dense: f64 = a
            .to_dense()
            .iter()
            .zip(b.to_dense())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        assert!((a.squared_distance(&b) - dense).abs() < 1e-12);
        assert_eq!(a.squared_distance(&a), 0.0);
    }

    #[test]
    fn vocabulary_json_round_trip() {
        let docs = vec![toks(&["a", "b", "c"]), toks(&["a", "b"]), toks(&["a"])];
        let model = TfIdfModel::fit(&docs, (1, 2), 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.json");
        model.write_json(&path).unwrap();
        let loaded = TfIdfModel::read_json(&path).unwrap();
        assert_eq!(model, loaded);
        let doc = toks(&["a", "b", "q"]);
        assert_eq!(model.transform(&doc), loaded.transform(&doc));
    }

    #[test]
    fn coo_round_trip() {
        let rows = vec![
            SparseVector::new(vec![(0, 1.5), (2, -2.0)], 4).unwrap(),
            SparseVector::empty(4),
            SparseVector::new(vec![(3, 0.25)], 4).unwrap(),
        ];
        let mut buffer = Vec::new();
        write_coo(&mut buffer, &rows).unwrap();
        let loaded = read_coo(std::io::Cursor::new(buffer)).unwrap();
        assert_eq!(rows, loaded);
    }
}
