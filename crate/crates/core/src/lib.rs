//! Sentiment analysis and drug recommendation over patient drug reviews.
//!
//! `rxrec-core` implements the full pipeline from raw review TSV to ranked
//! drug recommendations:
//!
//! 1. [`corpus`] — parse, validate, clean, label, split, and summarize the
//!    review dataset.
//! 2. [`textprep`] — normalize review text into token sequences.
//! 3. [`sparse`] — n-gram vocabularies, bag-of-words and TF-IDF vectors.
//! 4. [`dense`] — skip-gram word embeddings and hand-engineered features.
//! 5. [`resample`] — SMOTE minority oversampling of the training matrix.
//! 6. [`learn`] — linear, naive-Bayes, and tree-ensemble classifiers with a
//!    uniform fit / predict / decision-score contract.
//! 7. [`evaluate`] — precision, recall, F1, accuracy, and ROC-AUC reports.
//! 8. [`recommend`] — combined-vote drug scoring and per-condition rankings.
//!
//! Every algorithm is implemented here from first principles; the only
//! external machinery is I/O plumbing (TSV parsing, JSON serialization).
//! All randomized steps are driven by explicit seeds and are deterministic
//! across runs and platforms.
//!
//! The narrative guide under `book/` walks through each stage; its code
//! snippets compile and run as doctests via the [`guide`] module.

pub mod corpus;
pub mod dense;
mod error;
pub mod evaluate;
pub mod guide;
pub mod learn;
pub mod matrix;
pub mod recommend;
pub mod resample;
pub mod sparse;
pub mod synth;
pub mod textprep;

pub use error::{Error, Result};
