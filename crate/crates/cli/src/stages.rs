//! Pipeline stages. Each stage reads its dependencies from the artifact
//! directory, computes, writes outputs atomically, and records a manifest
//! binding those outputs to the config hash. A stage whose manifest
//! already matches the current hash is skipped, so interrupted runs
//! resume where they stopped.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rxrec_core::corpus::{self, CleaningReport, CorpusStats, ReviewRecord, Sentiment};
use rxrec_core::dense::{doc_vector, manual_features, train_word2vec, ConditionEncoder};
use rxrec_core::Error;
use rxrec_core::evaluate::{reports_to_csv, EvaluationReport};
use rxrec_core::learn::{fit_model, Algorithm, ClassifierModel};
use rxrec_core::matrix::{read_dense_tsv, write_dense_tsv, FeatureMatrix};
use rxrec_core::recommend::{
    combine_predictions, normalize_usefulcount, score_drugs, table_to_csv, DivisorMode,
    ScoredReview, VOTING_MODELS,
};
use rxrec_core::resample::{smote, LabeledMatrix, NeighborMode, SmoteConfig};
use rxrec_core::sparse::{idf, read_coo, write_coo, SparseVector, TfIdfModel, Vocabulary};
use rxrec_core::textprep::{preprocess_review, ProcessedDoc};

use crate::artifacts::{
    read_jsonl, require, stage_cached, write_atomic, write_atomic_with, write_json_pretty,
    write_jsonl, write_manifest, DataSplit, Paths,
};
use crate::config::{PipelineConfig, Rep, WinnerSpec};

/// Whether a stage computed fresh outputs or reused cached ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Ran,
    Cached,
}

/// Shared state for one invocation: resolved config, its hash, and the
/// artifact paths derived from the output directory.
pub struct Ctx {
    pub config: PipelineConfig,
    pub hash: String,
    pub paths: Paths,
    pub force: bool,
}

impl Ctx {
    pub fn new(config: PipelineConfig, force: bool) -> Result<Ctx> {
        let hash = config.hash();
        let paths = Paths::new(config.out_dir()?);
        Ok(Ctx { config, hash, paths, force })
    }

    fn cached(&self, stage: &str) -> bool {
        !self.force && stage_cached(&self.paths, stage, &self.hash)
    }
}

/// One preprocessed review: the cleaned record, its processed text, and
/// the sentiment label derived from the rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepRow {
    pub record: ReviewRecord,
    pub doc: ProcessedDoc,
    pub label: Sentiment,
}

/// Corpus-level summary stored by the `stats` stage.
#[derive(Debug, Serialize, Deserialize)]
pub struct StatsArtifact {
    pub parsed_rows: usize,
    pub malformed_rows: usize,
    pub cleaning: CleaningReport,
    pub corpus: CorpusStats,
}

/// Split bookkeeping stored by the `prep` stage.
#[derive(Debug, Serialize, Deserialize)]
pub struct SplitSummary {
    pub seed: u64,
    pub train_fraction: f64,
    pub train_rows: usize,
    pub test_rows: usize,
}

fn parse_and_clean(ctx: &Ctx) -> Result<(Vec<ReviewRecord>, CleaningReport, usize)> {
    let input = ctx.config.require_input()?;
    let input = require(input.to_path_buf(), "the input reviews file was not found")?;
    let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
    let parsed = corpus::parse_tsv(BufReader::new(file))
        .with_context(|| format!("parsing {}", input.display()))?;
    let malformed = parsed.row_errors.len();
    let (cleaned, report) = corpus::clean_corpus_with_report(parsed.records);
    Ok((cleaned, report, malformed))
}

/// Parse and clean the corpus, then store summary statistics.
pub fn run_stats(ctx: &Ctx) -> Result<StageOutcome> {
    let stage = "stats";
    if ctx.cached(stage) {
        println!("[{stage}] cached, skipping");
        return Ok(StageOutcome::Cached);
    }
    let started = Instant::now();
    let (cleaned, cleaning, malformed) = parse_and_clean(ctx)?;
    let corpus_stats = corpus::summarize(&cleaned);
    let artifact = StatsArtifact {
        parsed_rows: cleaning.input_rows,
        malformed_rows: malformed,
        cleaning,
        corpus: corpus_stats,
    };
    let out = ctx.paths.corpus_stats();
    write_json_pretty(&out, &artifact)?;
    write_manifest(&ctx.paths, stage, &ctx.hash, &[out.clone()])?;
    println!(
        "[{stage}] {} rows cleaned to {} (positive {} / negative {}), {} conditions; wrote {} in {:.1?}",
        artifact.cleaning.input_rows,
        artifact.cleaning.output_rows,
        artifact.corpus.positive_count,
        artifact.corpus.negative_count,
        artifact.corpus.condition_drug_counts.len(),
        out.display(),
        started.elapsed(),
    );
    Ok(StageOutcome::Ran)
}

/// Clean, split, and preprocess the corpus into cached train/test rows.
pub fn run_prep(ctx: &Ctx) -> Result<StageOutcome> {
    let stage = "prep";
    if ctx.cached(stage) {
        println!("[{stage}] cached, skipping");
        return Ok(StageOutcome::Cached);
    }
    let started = Instant::now();
    let (cleaned, cleaning, _) = parse_and_clean(ctx)?;
    let split = corpus::split(cleaned, ctx.config.train_fraction, ctx.config.seed)?;
    let summary = SplitSummary {
        seed: split.seed,
        train_fraction: split.train_fraction,
        train_rows: split.train.len(),
        test_rows: split.test.len(),
    };

    let mut outputs = vec![ctx.paths.cleaning_report(), ctx.paths.split_summary()];
    write_json_pretty(&ctx.paths.cleaning_report(), &cleaning)?;
    write_json_pretty(&ctx.paths.split_summary(), &summary)?;

    for (records, data_split) in [(split.train, DataSplit::Train), (split.test, DataSplit::Test)] {
        let rows: Vec<PrepRow> = records
            .into_par_iter()
            .map(|record| {
                let label = corpus::derive_label(record.rating)?;
                let doc = preprocess_review(&record);
                Ok(PrepRow { record, doc, label })
            })
            .collect::<Result<_, Error>>()?;

        let rows_path = ctx.paths.prep_rows(data_split);
        write_jsonl(&rows_path, &rows)?;

        let labels_path = ctx.paths.labels(data_split);
        write_atomic_with(&labels_path, |writer| {
            use std::io::Write;
            for row in &rows {
                let name = match row.label {
                    Sentiment::Positive => "positive",
                    Sentiment::Negative => "negative",
                };
                writeln!(writer, "{name}")?;
            }
            Ok(())
        })?;

        let tokens_path = ctx.paths.tokens(data_split);
        write_atomic_with(&tokens_path, |writer| {
            use std::io::Write;
            for row in &rows {
                writeln!(writer, "{}", row.doc.tokens.join(" "))?;
            }
            Ok(())
        })?;

        outputs.extend([rows_path, labels_path, tokens_path]);
    }

    write_manifest(&ctx.paths, stage, &ctx.hash, &outputs)?;
    println!(
        "[{stage}] {} train / {} test rows preprocessed in {:.1?}",
        summary.train_rows,
        summary.test_rows,
        started.elapsed(),
    );
    Ok(StageOutcome::Ran)
}

const PREP_HINT: &str = "run `rxrec prep` first";

fn read_tokens(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(|line| line.split_whitespace().map(str::to_string).collect())
        .collect())
}

fn read_labels(path: &Path) -> Result<Vec<Sentiment>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .map(|(index, line)| match line {
            "positive" => Ok(Sentiment::Positive),
            "negative" => Ok(Sentiment::Negative),
            other => bail!("{}: bad label {other:?} on line {}", path.display(), index + 1),
        })
        .collect()
}

/// Replace `path` with whatever `write` produces at a temporary sibling.
fn persist_with<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&Path) -> rxrec_core::Result<()>,
{
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(parent)?;
    let file_name = path
        .file_name()
        .ok_or_else(|| anyhow::anyhow!("artifact path {} has no file name", path.display()))?;
    let temp = parent.join(format!(
        ".{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    if let Err(err) = write(&temp) {
        let _ = fs::remove_file(&temp);
        return Err(err.into());
    }
    fs::rename(&temp, path).with_context(|| format!("renaming {} into place", path.display()))?;
    Ok(())
}

fn write_sparse_matrix(path: &Path, rows: &[SparseVector]) -> Result<()> {
    write_atomic_with(path, |writer| {
        write_coo(writer, rows)?;
        Ok(())
    })
}

fn write_dense_matrix(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    write_atomic_with(path, |writer| {
        write_dense_tsv(writer, rows)?;
        Ok(())
    })
}

/// Fit one representation on the training split and vectorize both splits.
pub fn run_featurize(ctx: &Ctx, rep: Rep) -> Result<StageOutcome> {
    let stage = format!("featurize_{rep}");
    if ctx.cached(&stage) {
        println!("[{stage}] cached, skipping");
        return Ok(StageOutcome::Cached);
    }
    let started = Instant::now();
    let train_path = ctx.paths.feature_matrix(rep, DataSplit::Train);
    let test_path = ctx.paths.feature_matrix(rep, DataSplit::Test);
    let mut outputs = vec![train_path.clone(), test_path.clone()];
    let dim;

    match rep {
        Rep::Bow => {
            let train_tokens = read_tokens(&require(ctx.paths.tokens(DataSplit::Train), PREP_HINT)?)?;
            let test_tokens = read_tokens(&require(ctx.paths.tokens(DataSplit::Test), PREP_HINT)?)?;
            let range = (ctx.config.features.ngram_min, ctx.config.features.ngram_max);
            let vocabulary = Vocabulary::fit(&train_tokens, range, ctx.config.features.min_df)?;
            dim = vocabulary.len();

            let vocab_path = ctx.paths.vocabulary();
            write_atomic_with(&vocab_path, |writer| {
                serde_json::to_writer(writer, &vocabulary)?;
                Ok(())
            })?;
            outputs.push(vocab_path);

            let train_rows: Vec<SparseVector> =
                train_tokens.par_iter().map(|tokens| vocabulary.bow_transform(tokens)).collect();
            let test_rows: Vec<SparseVector> =
                test_tokens.par_iter().map(|tokens| vocabulary.bow_transform(tokens)).collect();
            write_sparse_matrix(&train_path, &train_rows)?;
            write_sparse_matrix(&test_path, &test_rows)?;
        }
        Rep::Tfidf => {
            let train_tokens = read_tokens(&require(ctx.paths.tokens(DataSplit::Train), PREP_HINT)?)?;
            let test_tokens = read_tokens(&require(ctx.paths.tokens(DataSplit::Test), PREP_HINT)?)?;
            let range = (ctx.config.features.ngram_min, ctx.config.features.ngram_max);
            let model = TfIdfModel::fit(&train_tokens, range, ctx.config.features.min_df)?;
            dim = model.vocabulary().len();

            let model_path = ctx.paths.tfidf_model();
            persist_with(&model_path, |temp| model.write_json(temp))?;
            outputs.push(model_path);

            let train_rows: Vec<SparseVector> =
                train_tokens.par_iter().map(|tokens| model.transform(tokens)).collect();
            let test_rows: Vec<SparseVector> =
                test_tokens.par_iter().map(|tokens| model.transform(tokens)).collect();
            write_sparse_matrix(&train_path, &train_rows)?;
            write_sparse_matrix(&test_path, &test_rows)?;
        }
        Rep::Word2vec => {
            let train_tokens = read_tokens(&require(ctx.paths.tokens(DataSplit::Train), PREP_HINT)?)?;
            let test_tokens = read_tokens(&require(ctx.paths.tokens(DataSplit::Test), PREP_HINT)?)?;
            let (table, losses) = train_word2vec(&train_tokens, ctx.config.features.word2vec)?;
            dim = table.dim();

            let table_path = ctx.paths.embeddings();
            persist_with(&table_path, |temp| table.write_text(temp))?;
            let losses_path = ctx.paths.embedding_losses();
            write_json_pretty(&losses_path, &losses)?;
            outputs.extend([table_path, losses_path]);

            let train_rows: Vec<Vec<f64>> =
                train_tokens.par_iter().map(|tokens| doc_vector(tokens, &table)).collect();
            let test_rows: Vec<Vec<f64>> =
                test_tokens.par_iter().map(|tokens| doc_vector(tokens, &table)).collect();
            write_dense_matrix(&train_path, &train_rows)?;
            write_dense_matrix(&test_path, &test_rows)?;
        }
        Rep::Manual => {
            let train_rows: Vec<PrepRow> =
                read_jsonl(&require(ctx.paths.prep_rows(DataSplit::Train), PREP_HINT)?)?;
            let test_rows: Vec<PrepRow> =
                read_jsonl(&require(ctx.paths.prep_rows(DataSplit::Test), PREP_HINT)?)?;
            let encoder = ConditionEncoder::fit(
                train_rows.iter().filter_map(|row| row.record.condition.as_deref()),
            );

            let encoder_path = ctx.paths.condition_encoder();
            write_json_pretty(&encoder_path, &encoder)?;
            outputs.push(encoder_path);

            let train_features: Vec<Vec<f64>> = train_rows
                .par_iter()
                .map(|row| manual_features(&row.record, &encoder))
                .collect();
            let test_features: Vec<Vec<f64>> = test_rows
                .par_iter()
                .map(|row| manual_features(&row.record, &encoder))
                .collect();
            dim = train_features.first().map_or(0, Vec::len);
            write_dense_matrix(&train_path, &train_features)?;
            write_dense_matrix(&test_path, &test_features)?;
        }
    }

    write_manifest(&ctx.paths, &stage, &ctx.hash, &outputs)?;
    println!("[{stage}] {dim} features per row in {:.1?}", started.elapsed());
    Ok(StageOutcome::Ran)
}

fn load_features(ctx: &Ctx, rep: Rep, split: DataSplit) -> Result<FeatureMatrix> {
    let hint = format!("run `rxrec featurize --rep {rep}` first");
    let path = require(ctx.paths.feature_matrix(rep, split), &hint)?;
    let reader = BufReader::new(File::open(&path)?);
    let matrix = if rep.is_sparse() {
        let rows = read_coo(reader).with_context(|| format!("reading {}", path.display()))?;
        let dim = rows.first().map(SparseVector::dim).unwrap_or(0);
        FeatureMatrix::sparse(rows, dim)?
    } else {
        let rows = read_dense_tsv(reader).with_context(|| format!("reading {}", path.display()))?;
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        FeatureMatrix::dense(rows, dim)?
    };
    if matrix.n_rows() == 0 {
        bail!("feature matrix {} is empty", path.display());
    }
    Ok(matrix)
}

/// Inverse document frequencies aligned with the stored vocabulary, used
/// to rank raw-count coordinates during coarse neighbor search.
fn bow_idf_weights(ctx: &Ctx) -> Result<Vec<f64>> {
    let path = require(ctx.paths.vocabulary(), "run `rxrec featurize --rep bow` first")?;
    let text = fs::read_to_string(&path)?;
    let vocabulary: Vocabulary =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut weights = vec![0.0; vocabulary.len()];
    for (gram, info) in vocabulary.iter() {
        weights[info.index] = idf(gram, &vocabulary)?;
    }
    Ok(weights)
}

/// Train one classifier on one representation, oversampling the minority
/// class first when enabled.
pub fn run_train(ctx: &Ctx, algorithm: Algorithm, rep: Rep) -> Result<StageOutcome> {
    let id = format!("{}_{}", algorithm.name(), rep.name());
    let stage = format!("train_{id}");
    if ctx.cached(&stage) {
        println!("[{stage}] cached, skipping");
        return Ok(StageOutcome::Cached);
    }
    let started = Instant::now();
    let features = load_features(ctx, rep, DataSplit::Train)?;
    let labels = read_labels(&require(ctx.paths.labels(DataSplit::Train), PREP_HINT)?)?;
    let mut train = LabeledMatrix::new(features, labels)?;

    if ctx.config.smote.enabled {
        let smote_config = SmoteConfig {
            k_neighbors: ctx.config.smote.k_neighbors,
            target_ratio: ctx.config.smote.target_ratio,
            seed: ctx.config.seed,
            neighbor_mode: if rep.is_sparse() {
                NeighborMode::Coarse { top_f: ctx.config.smote.coarse_top_f }
            } else {
                NeighborMode::Exact
            },
        };
        // Raw counts alone rank common-word coordinates first; idf weights
        // push the comparison toward distinctive grams. Tf-idf values are
        // already idf-scaled, and dense rows use exact distances.
        let weights = if rep == Rep::Bow { Some(bow_idf_weights(ctx)?) } else { None };
        let before = train.features.n_rows();
        train = smote(train, &smote_config, weights.as_deref())?;
        let after = train.features.n_rows();
        if after != before {
            println!("[{stage}] oversampled {before} -> {after} training rows");
        }
    }

    let model = fit_model(algorithm, &train, &ctx.config.models)?;
    let model_path = ctx.paths.model(&id);
    persist_with(&model_path, |temp| model.write_json(temp))?;
    write_manifest(&ctx.paths, &stage, &ctx.hash, &[model_path.clone()])?;
    println!("[{stage}] wrote {} in {:.1?}", model_path.display(), started.elapsed());
    Ok(StageOutcome::Ran)
}

/// Model files present on disk, sorted by filename for deterministic reports.
fn trained_models(ctx: &Ctx) -> Result<Vec<(String, Algorithm, Rep)>> {
    let dir = ctx.paths.models_dir();
    let mut found = Vec::new();
    if dir.is_dir() {
        for entry in fs::read_dir(&dir)? {
            let name = entry?.file_name();
            let name = name.to_string_lossy();
            let Some(stem) = name.strip_suffix(".json") else { continue };
            let Some((model_part, rep_part)) = stem.rsplit_once('_') else { continue };
            let Ok(algorithm) = model_part.parse::<Algorithm>() else { continue };
            let Some(rep) = Rep::from_name(rep_part) else { continue };
            found.push((stem.to_string(), algorithm, rep));
        }
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(found)
}

/// Score every trained model on the test split and emit metric reports.
pub fn run_evaluate(ctx: &Ctx) -> Result<StageOutcome> {
    let stage = "evaluate";
    if ctx.cached(stage) {
        println!("[{stage}] cached, skipping");
        return Ok(StageOutcome::Cached);
    }
    let started = Instant::now();
    let found = trained_models(ctx)?;
    if found.is_empty() {
        let first = ctx.config.winners.first().expect("config validated non-empty winners");
        require(
            ctx.paths.model(&first.id()),
            "no trained models found; run `rxrec train` or `rxrec pipeline` first",
        )?;
    }

    let test_labels = read_labels(&require(ctx.paths.labels(DataSplit::Test), PREP_HINT)?)?;
    let mut matrices: BTreeMap<Rep, LabeledMatrix> = BTreeMap::new();
    let mut reports = Vec::with_capacity(found.len());
    for (id, algorithm, rep) in &found {
        if !matrices.contains_key(rep) {
            let features = load_features(ctx, *rep, DataSplit::Test)?;
            matrices.insert(*rep, LabeledMatrix::new(features, test_labels.clone())?);
        }
        let model = ClassifierModel::read_json(&ctx.paths.model(id))?;
        let scores = model
            .decision_scores(&matrices[rep])
            .with_context(|| format!("scoring {id} on the test split"))?;
        let report = EvaluationReport::from_scores(algorithm.name(), rep.name(), &scores, &test_labels)?;
        println!(
            "[{stage}] {id}: accuracy {:.4}, auc {:.4}",
            report.accuracy.value, report.auc,
        );
        reports.push(report);
    }

    let csv_path = ctx.paths.evaluation_csv();
    let json_path = ctx.paths.evaluation_json();
    write_atomic(&csv_path, reports_to_csv(&reports).as_bytes())?;
    write_json_pretty(&json_path, &reports)?;
    write_manifest(&ctx.paths, stage, &ctx.hash, &[csv_path.clone(), json_path.clone()])?;
    println!("[{stage}] {} models reported in {:.1?}", reports.len(), started.elapsed());
    Ok(StageOutcome::Ran)
}

/// Combine the winner models' votes into per-condition drug rankings.
pub fn run_recommend(ctx: &Ctx) -> Result<StageOutcome> {
    let stage = "recommend";
    if ctx.cached(stage) {
        println!("[{stage}] cached, skipping");
        return Ok(StageOutcome::Cached);
    }
    let started = Instant::now();
    let winners = &ctx.config.winners;
    if winners.len() != VOTING_MODELS {
        bail!(
            "recommendation voting needs exactly {VOTING_MODELS} winner models, got {}",
            winners.len()
        );
    }

    let rows: Vec<PrepRow> = read_jsonl(&require(ctx.paths.prep_rows(DataSplit::Test), PREP_HINT)?)?;
    let test_labels = read_labels(&require(ctx.paths.labels(DataSplit::Test), PREP_HINT)?)?;
    let mut matrices: BTreeMap<Rep, LabeledMatrix> = BTreeMap::new();
    let mut votes: Vec<Vec<Sentiment>> = vec![Vec::with_capacity(winners.len()); rows.len()];
    for winner in winners {
        let id = winner.id();
        let hint = format!(
            "run `rxrec train --model {} --rep {}` or `rxrec pipeline` first",
            winner.model, winner.rep,
        );
        let model_path = require(ctx.paths.model(&id), &hint)?;
        let model = ClassifierModel::read_json(&model_path)?;
        if !matrices.contains_key(&winner.rep) {
            let features = load_features(ctx, winner.rep, DataSplit::Test)?;
            matrices.insert(winner.rep, LabeledMatrix::new(features, test_labels.clone())?);
        }
        let scores = model
            .decision_scores(&matrices[&winner.rep])
            .with_context(|| format!("scoring {id} on the test split"))?;
        if scores.len() != rows.len() {
            bail!(
                "feature rows ({}) disagree with preprocessed rows ({}); re-run `rxrec prep` and `rxrec featurize`",
                scores.len(),
                rows.len()
            );
        }
        for (row_votes, score) in votes.iter_mut().zip(&scores) {
            row_votes.push(Sentiment::from_score(*score));
        }
    }

    let records: Vec<ReviewRecord> = rows.iter().map(|row| row.record.clone()).collect();
    let norm = normalize_usefulcount(&records);
    let mut scored = Vec::with_capacity(rows.len());
    for (row, predictions) in rows.iter().zip(&votes) {
        let combined = combine_predictions(row.record.unique_id, predictions)?;
        let norm_useful = norm
            .get(&row.record.unique_id)
            .copied()
            .expect("every test record was normalized");
        scored.push(ScoredReview {
            condition: row.record.condition.clone().unwrap_or_default(),
            drug_name: row.record.drug_name.clone(),
            votes: combined.votes,
            norm_useful,
        });
    }

    let ids: Vec<String> = winners.iter().map(WinnerSpec::id).collect();
    let divisor = if ctx.config.recommend.mean_by_reviews {
        DivisorMode::ReviewsPerDrug
    } else {
        DivisorMode::DistinctDrugs
    };
    let table = score_drugs(&scored, &ids, divisor)?;
    let csv = table_to_csv(&table, ctx.config.recommend.conditions, ctx.config.recommend.top_n);

    let csv_path = ctx.paths.recommendations_csv();
    let json_path = ctx.paths.recommendations_json();
    write_atomic(&csv_path, csv.as_bytes())?;
    write_json_pretty(&json_path, &table)?;
    write_manifest(&ctx.paths, stage, &ctx.hash, &[csv_path.clone(), json_path.clone()])?;
    println!(
        "[{stage}] ranked drugs for {} conditions in {:.1?}",
        table.conditions.len(),
        started.elapsed(),
    );
    Ok(StageOutcome::Ran)
}

/// Run every stage in dependency order; the winner models train in parallel.
pub fn run_pipeline(ctx: &Ctx) -> Result<()> {
    run_stats(ctx)?;
    run_prep(ctx)?;

    let mut reps: Vec<Rep> = ctx.config.winners.iter().map(|w| w.rep).collect();
    reps.sort();
    reps.dedup();
    for rep in reps {
        run_featurize(ctx, rep)?;
    }

    let mut pairs: Vec<WinnerSpec> = ctx.config.winners.clone();
    pairs.sort_by_key(WinnerSpec::id);
    pairs.dedup();
    pairs
        .par_iter()
        .try_for_each(|winner| run_train(ctx, winner.model, winner.rep).map(|_| ()))?;

    run_evaluate(ctx)?;
    run_recommend(ctx)?;
    Ok(())
}
