//! Pipeline configuration: a single JSON file with documented defaults,
//! command-line overrides (flags win), and a content hash that binds
//! on-disk artifacts to the settings that produced them.

use std::env;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rxrec_core::dense::Word2VecConfig;
use rxrec_core::learn::{Algorithm, FitSettings};

/// Environment variable consulted for the default output directory.
pub const OUT_DIR_ENV: &str = "RXREC_OUT";

/// Feature representation a matrix, model, or stage is keyed by.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum Rep {
    /// Unigram + bigram counts over a vocabulary fitted on the training split.
    Bow,
    /// Log-scaled term frequency times inverse document frequency.
    Tfidf,
    /// Mean of skip-gram token embeddings trained on the training split.
    Word2vec,
    /// Hand-built per-review features (length, polarity, condition code, ...).
    Manual,
}

impl Rep {
    pub const ALL: [Rep; 4] = [Rep::Bow, Rep::Tfidf, Rep::Word2vec, Rep::Manual];

    pub fn name(self) -> &'static str {
        match self {
            Rep::Bow => "bow",
            Rep::Tfidf => "tfidf",
            Rep::Word2vec => "word2vec",
            Rep::Manual => "manual",
        }
    }

    /// Whether this representation stores rows sparsely on disk and in memory.
    pub fn is_sparse(self) -> bool {
        matches!(self, Rep::Bow | Rep::Tfidf)
    }

    pub fn from_name(name: &str) -> Option<Rep> {
        Rep::ALL.into_iter().find(|r| r.name() == name)
    }
}

impl fmt::Display for Rep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One classifier/representation pair that votes in the recommender.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinnerSpec {
    pub model: Algorithm,
    pub rep: Rep,
}

impl WinnerSpec {
    /// Identifier used in model filenames and report columns.
    pub fn id(&self) -> String {
        format!("{}_{}", self.model.name(), self.rep.name())
    }
}

/// The best-performing pair per representation; the recommender's default
/// voting committee.
pub fn default_winners() -> Vec<WinnerSpec> {
    vec![
        WinnerSpec { model: Algorithm::Perceptron, rep: Rep::Bow },
        WinnerSpec { model: Algorithm::LinearSvc, rep: Rep::Tfidf },
        WinnerSpec { model: Algorithm::Gbdt, rep: Rep::Word2vec },
        WinnerSpec { model: Algorithm::RandomForest, rep: Rep::Manual },
    ]
}

/// Minority-oversampling settings applied to the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteSettings {
    pub enabled: bool,
    pub k_neighbors: usize,
    /// Desired minority/majority ratio after synthesis, in (0, 1].
    pub target_ratio: f64,
    /// Coordinates kept per row when neighbor search runs in coarse mode
    /// (sparse representations only).
    pub coarse_top_f: usize,
}

impl Default for SmoteSettings {
    fn default() -> Self {
        SmoteSettings { enabled: true, k_neighbors: 5, target_ratio: 0.7, coarse_top_f: 1000 }
    }
}

/// Vectorizer settings shared by the representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSettings {
    /// Smallest n-gram length for the sparse vocabularies.
    pub ngram_min: usize,
    /// Largest n-gram length for the sparse vocabularies.
    pub ngram_max: usize,
    /// Minimum document frequency for a gram to enter the vocabulary.
    pub min_df: usize,
    pub word2vec: Word2VecConfig,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        FeatureSettings { ngram_min: 1, ngram_max: 2, min_df: 2, word2vec: Word2VecConfig::default() }
    }
}

/// Output shaping for the `recommend` stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecommendSettings {
    /// Keep only the best N drugs per condition in the CSV.
    pub top_n: Option<usize>,
    /// Keep only the K most-reviewed conditions in the CSV.
    pub conditions: Option<usize>,
    /// Divide each drug's total by its own review count instead of the
    /// condition's distinct-drug count.
    pub mean_by_reviews: bool,
}

/// Everything a pipeline run depends on, resolvable from one JSON file.
///
/// A fully-resolved config serializes and re-parses to itself, so a run can
/// be reproduced from the stored settings alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Raw reviews TSV; required by `stats`, `prep`, and `pipeline`.
    pub input: Option<PathBuf>,
    /// Artifact directory; `None` falls back to `$RXREC_OUT`, then `rxrec-out`.
    pub out_dir: Option<PathBuf>,
    /// Seed for the train/test split and oversampling.
    pub seed: u64,
    /// Fraction of cleaned rows assigned to training.
    pub train_fraction: f64,
    pub smote: SmoteSettings,
    pub features: FeatureSettings,
    /// Per-model hyperparameters, keyed by family.
    pub models: FitSettings,
    /// Classifier/representation pairs whose votes feed the recommender.
    pub winners: Vec<WinnerSpec>,
    pub recommend: RecommendSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            out_dir: None,
            seed: 42,
            train_fraction: 0.75,
            smote: SmoteSettings::default(),
            features: FeatureSettings::default(),
            models: FitSettings::default(),
            winners: default_winners(),
            recommend: RecommendSettings::default(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub train_fraction: Option<f64>,
    pub no_smote: bool,
}

impl PipelineConfig {
    /// Read a config file, or start from defaults when no file is given.
    pub fn load(path: Option<&Path>) -> Result<PipelineConfig> {
        match path {
            None => Ok(PipelineConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config file {}", p.display()))
            }
        }
    }

    /// Apply command-line flags on top of the file values.
    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(input) = &overrides.input {
            self.input = Some(input.clone());
        }
        if let Some(out_dir) = &overrides.out_dir {
            self.out_dir = Some(out_dir.clone());
        }
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(fraction) = overrides.train_fraction {
            self.train_fraction = fraction;
        }
        if overrides.no_smote {
            self.smote.enabled = false;
        }
    }

    /// Fill in `out_dir` from the environment or the built-in default.
    pub fn resolve_out_dir(&mut self) {
        self.resolve_out_dir_with(env::var_os(OUT_DIR_ENV).map(PathBuf::from));
    }

    fn resolve_out_dir_with(&mut self, env_value: Option<PathBuf>) {
        if self.out_dir.is_none() {
            self.out_dir = Some(env_value.unwrap_or_else(|| PathBuf::from("rxrec-out")));
        }
    }

    /// The resolved artifact directory. Call [`resolve_out_dir`] first.
    ///
    /// [`resolve_out_dir`]: PipelineConfig::resolve_out_dir
    pub fn out_dir(&self) -> Result<&Path> {
        self.out_dir
            .as_deref()
            .ok_or_else(|| anyhow::anyhow!("output directory not resolved"))
    }

    pub fn require_input(&self) -> Result<&Path> {
        self.input.as_deref().ok_or_else(|| {
            anyhow::anyhow!("no input file configured; pass --input or set \"input\" in the config")
        })
    }

    /// Hash of every semantically meaningful field.
    ///
    /// The output directory is excluded: it decides where artifacts land,
    /// never what they contain.
    pub fn hash(&self) -> String {
        let mut hashed = self.clone();
        hashed.out_dir = None;
        let bytes = serde_json::to_vec(&hashed).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    /// Reject values no stage could run with.
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bail!("train_fraction {} outside (0, 1)", self.train_fraction);
        }
        if self.features.ngram_min == 0 || self.features.ngram_min > self.features.ngram_max {
            bail!(
                "ngram range ({}, {}) must satisfy 1 <= min <= max",
                self.features.ngram_min,
                self.features.ngram_max
            );
        }
        if self.features.min_df == 0 {
            bail!("min_df must be at least 1");
        }
        if self.smote.enabled {
            if !(self.smote.target_ratio > 0.0 && self.smote.target_ratio <= 1.0) {
                bail!("smote target_ratio {} outside (0, 1]", self.smote.target_ratio);
            }
            if self.smote.k_neighbors == 0 {
                bail!("smote k_neighbors must be at least 1");
            }
            if self.smote.coarse_top_f == 0 {
                bail!("smote coarse_top_f must be at least 1");
            }
        }
        if self.winners.is_empty() {
            bail!("winners must name at least one model/representation pair");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_config_round_trips_to_itself() {
        let mut config = PipelineConfig::default();
        config.input = Some(PathBuf::from("reviews.tsv"));
        config.resolve_out_dir_with(None);
        config.seed = 7;
        config.smote.target_ratio = 0.5;
        config.recommend.top_n = Some(4);

        let json = serde_json::to_string_pretty(&config).unwrap();
        let reparsed: PipelineConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(reparsed, config);
    }

    #[test]
    fn empty_config_file_means_all_defaults() {
        let parsed: PipelineConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(parsed, PipelineConfig::default());
        assert_eq!(parsed.seed, 42);
        assert_eq!(parsed.train_fraction, 0.75);
        assert!(parsed.smote.enabled);
    }

    #[test]
    fn hash_ignores_out_dir_but_tracks_everything_else() {
        let mut a = PipelineConfig::default();
        a.out_dir = Some(PathBuf::from("/tmp/run-a"));
        let mut b = a.clone();
        b.out_dir = Some(PathBuf::from("/tmp/run-b"));
        assert_eq!(a.hash(), b.hash(), "output location must not change the hash");

        let mut changed = a.clone();
        changed.seed = 43;
        assert_ne!(a.hash(), changed.hash(), "seed is semantically meaningful");

        let mut changed = a.clone();
        changed.recommend.top_n = Some(4);
        assert_ne!(a.hash(), changed.hash(), "report truncation changes artifacts");

        let mut changed = a.clone();
        changed.models.nb_alpha = 2.0;
        assert_ne!(a.hash(), changed.hash(), "hyperparameters are meaningful");
    }

    #[test]
    fn flags_win_over_file_values() {
        let mut config: PipelineConfig =
            serde_json::from_str(r#"{"input": "file.tsv", "seed": 1, "train_fraction": 0.6}"#)
                .unwrap();
        config.apply(&Overrides {
            input: Some(PathBuf::from("other.tsv")),
            out_dir: None,
            seed: Some(99),
            train_fraction: None,
            no_smote: true,
        });
        assert_eq!(config.input.as_deref(), Some(Path::new("other.tsv")));
        assert_eq!(config.seed, 99);
        assert_eq!(config.train_fraction, 0.6, "unset flags leave file values alone");
        assert!(!config.smote.enabled);
    }

    #[test]
    fn out_dir_resolution_prefers_explicit_then_env_then_default() {
        let mut explicit = PipelineConfig::default();
        explicit.out_dir = Some(PathBuf::from("chosen"));
        explicit.resolve_out_dir_with(Some(PathBuf::from("from-env")));
        assert_eq!(explicit.out_dir.as_deref(), Some(Path::new("chosen")));

        let mut from_env = PipelineConfig::default();
        from_env.resolve_out_dir_with(Some(PathBuf::from("from-env")));
        assert_eq!(from_env.out_dir.as_deref(), Some(Path::new("from-env")));

        let mut fallback = PipelineConfig::default();
        fallback.resolve_out_dir_with(None);
        assert_eq!(fallback.out_dir.as_deref(), Some(Path::new("rxrec-out")));
    }

    #[test]
    fn default_winners_cover_all_four_representations() {
        let winners = default_winners();
        assert_eq!(winners.len(), 4);
        let ids: Vec<String> = winners.iter().map(WinnerSpec::id).collect();
        assert_eq!(
            ids,
            ["perceptron_bow", "linear_svc_tfidf", "gbdt_word2vec", "random_forest_manual"]
        );
        let mut reps: Vec<Rep> = winners.iter().map(|w| w.rep).collect();
        reps.sort();
        assert_eq!(reps, Rep::ALL.to_vec());
    }

    #[test]
    fn rep_names_round_trip() {
        for rep in Rep::ALL {
            assert_eq!(Rep::from_name(rep.name()), Some(rep));
        }
        assert_eq!(Rep::from_name("sparse"), None);
    }

    #[test]
    fn validate_rejects_degenerate_values() {
        let mut config = PipelineConfig::default();
        config.train_fraction = 1.0;
        assert!(config.validate().is_err());

        let mut config = PipelineConfig::default();
        config.features.ngram_min = 3;
        config.features.ngram_max = 2;
        assert!(config.validate().is_err());

        let mut config = PipelineConfig::default();
        config.smote.target_ratio = 0.0;
        assert!(config.validate().is_err());

        let mut config = PipelineConfig::default();
        config.winners.clear();
        assert!(config.validate().is_err());

        assert!(PipelineConfig::default().validate().is_ok());
    }
}
