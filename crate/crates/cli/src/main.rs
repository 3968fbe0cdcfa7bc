//! `rxrec`: a reproducible drug-review pipeline. Cleans the corpus,
//! derives sentiment labels, vectorizes text four ways, trains classifiers,
//! reports their metrics, and ranks drugs per condition from the winning
//! models' combined votes.
//!
//! Every stage caches its outputs under the output directory with a
//! manifest recording the config hash, so re-runs skip finished work and
//! identical configs reproduce identical artifacts byte for byte.

mod artifacts;
mod config;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use rxrec_core::learn::Algorithm;

use crate::config::{Overrides, PipelineConfig, Rep};
use crate::stages::Ctx;

#[derive(Debug, Parser)]
#[command(
    name = "rxrec",
    version,
    about = "Drug-review sentiment analysis and per-condition drug recommendation",
    after_help = "Stages cache their outputs; re-running a finished stage under the same \
                  config is a no-op. `pipeline` runs everything in dependency order."
)]
struct Cli {
    /// JSON config file; omitted fields take their documented defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Input reviews TSV (overrides the config file).
    #[arg(long, global = true, value_name = "FILE")]
    input: Option<PathBuf>,

    /// Artifact directory (default: $RXREC_OUT, then ./rxrec-out).
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Seed for the train/test split and minority oversampling.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Fraction of cleaned rows assigned to training, in (0, 1).
    #[arg(long, global = true)]
    train_fraction: Option<f64>,

    /// Disable minority oversampling before training.
    #[arg(long, global = true)]
    no_smote: bool,

    /// Re-run the requested stage even when a cached result matches.
    #[arg(long, global = true)]
    force: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and clean the corpus, then store summary statistics.
    Stats,
    /// Clean, split, and preprocess the corpus into cached train/test rows.
    Prep,
    /// Fit one feature representation and vectorize both splits.
    Featurize {
        #[arg(long, value_enum)]
        rep: Rep,
    },
    /// Train one classifier on one representation.
    Train {
        /// One of: multinomial_nb, logistic_regression, perceptron, ridge,
        /// linear_svc, sgd_hinge, decision_tree, random_forest, gbdt.
        #[arg(long)]
        model: Algorithm,
        #[arg(long, value_enum)]
        rep: Rep,
    },
    /// Score every trained model on the test split and emit metric reports.
    Evaluate,
    /// Combine the winner models' votes into per-condition drug rankings.
    Recommend {
        /// Keep only the best N drugs per condition in the CSV.
        #[arg(long)]
        top_n: Option<usize>,
        /// Keep only the K most-reviewed conditions in the CSV.
        #[arg(long)]
        conditions: Option<usize>,
        /// Divide each drug's total by its own review count instead of the
        /// condition's distinct-drug count.
        #[arg(long)]
        mean_by_reviews: bool,
    },
    /// Run every stage: stats, prep, featurize, train, evaluate, recommend.
    Pipeline,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = PipelineConfig::load(cli.config.as_deref())?;
    config.apply(&Overrides {
        input: cli.input,
        out_dir: cli.out_dir,
        seed: cli.seed,
        train_fraction: cli.train_fraction,
        no_smote: cli.no_smote,
    });
    if let Command::Recommend { top_n, conditions, mean_by_reviews } = &cli.command {
        if top_n.is_some() {
            config.recommend.top_n = *top_n;
        }
        if conditions.is_some() {
            config.recommend.conditions = *conditions;
        }
        if *mean_by_reviews {
            config.recommend.mean_by_reviews = true;
        }
    }
    config.resolve_out_dir();
    config.validate()?;

    let ctx = Ctx::new(config, cli.force)?;
    match cli.command {
        Command::Stats => stages::run_stats(&ctx).map(|_| ()),
        Command::Prep => stages::run_prep(&ctx).map(|_| ()),
        Command::Featurize { rep } => stages::run_featurize(&ctx, rep).map(|_| ()),
        Command::Train { model, rep } => stages::run_train(&ctx, model, rep).map(|_| ()),
        Command::Evaluate => stages::run_evaluate(&ctx).map(|_| ()),
        Command::Recommend { .. } => stages::run_recommend(&ctx).map(|_| ()),
        Command::Pipeline => stages::run_pipeline(&ctx),
    }
}
