//! The narrative guide, compiled straight from the book sources.
//!
//! Each module below carries one chapter of the mdBook under `book/` as its
//! documentation, included verbatim with `include_str!`. Rustdoc executes
//! the chapters' Rust snippets as doctests, so `cargo test --doc` fails the
//! moment the book and the library drift apart. Read the rendered book for
//! the narrative, or browse these modules for the same content inside the
//! API docs.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/corpus.md")]
pub mod review_corpus {}

#[doc = include_str!("../../../book/src/cleaning-and-splitting.md")]
pub mod cleaning_and_splitting {}

#[doc = include_str!("../../../book/src/text-preprocessing.md")]
pub mod text_preprocessing {}

#[doc = include_str!("../../../book/src/bag-of-words.md")]
pub mod bag_of_words {}

#[doc = include_str!("../../../book/src/tfidf.md")]
pub mod tfidf_weighting {}

#[doc = include_str!("../../../book/src/word-embeddings.md")]
pub mod word_embeddings {}

#[doc = include_str!("../../../book/src/manual-features.md")]
pub mod manual_features {}

#[doc = include_str!("../../../book/src/oversampling.md")]
pub mod oversampling {}

#[doc = include_str!("../../../book/src/classifiers.md")]
pub mod training_classifiers {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluating_models {}

#[doc = include_str!("../../../book/src/recommendation.md")]
pub mod ranking_drugs {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod command_line_pipeline {}

#[doc = include_str!("../../../book/src/determinism.md")]
pub mod determinism_and_persistence {}
