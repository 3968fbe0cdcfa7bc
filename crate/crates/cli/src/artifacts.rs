//! Artifact layout under the output directory, atomic file writes, stage
//! manifests, and JSON-lines helpers.
//!
//! Every stage writes its outputs with a write-temp-then-rename so a
//! crashed run never leaves a half-written artifact, then records a
//! manifest naming the outputs and the config hash that produced them.
//! A stage whose manifest matches the current hash and whose outputs all
//! exist is skipped on re-run.

use std::fs;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::Utc;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use rxrec_core::Error;

use crate::config::Rep;

/// Which half of the corpus split a cached artifact belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSplit {
    Train,
    Test,
}

impl DataSplit {
    pub fn name(self) -> &'static str {
        match self {
            DataSplit::Train => "train",
            DataSplit::Test => "test",
        }
    }
}

/// Resolver for every artifact path under one output directory.
#[derive(Debug, Clone)]
pub struct Paths {
    root: PathBuf,
}

impl Paths {
    pub fn new(root: impl Into<PathBuf>) -> Paths {
        Paths { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self, stage: &str) -> PathBuf {
        self.root.join("manifests").join(format!("{stage}.json"))
    }

    pub fn corpus_stats(&self) -> PathBuf {
        self.root.join("stats").join("corpus_stats.json")
    }

    pub fn cleaning_report(&self) -> PathBuf {
        self.root.join("prep").join("cleaning_report.json")
    }

    pub fn split_summary(&self) -> PathBuf {
        self.root.join("prep").join("split.json")
    }

    /// Full preprocessed rows (record, processed text, label) as JSON lines.
    pub fn prep_rows(&self, split: DataSplit) -> PathBuf {
        self.root.join("prep").join(format!("{}.jsonl", split.name()))
    }

    /// One `positive`/`negative` line per row, aligned with the JSONL rows.
    pub fn labels(&self, split: DataSplit) -> PathBuf {
        self.root.join("prep").join(format!("{}_labels.tsv", split.name()))
    }

    /// One space-joined token sequence per row, aligned with the JSONL rows.
    pub fn tokens(&self, split: DataSplit) -> PathBuf {
        self.root.join("prep").join(format!("{}_tokens.txt", split.name()))
    }

    pub fn rep_dir(&self, rep: Rep) -> PathBuf {
        self.root.join("features").join(rep.name())
    }

    pub fn vocabulary(&self) -> PathBuf {
        self.rep_dir(Rep::Bow).join("vocabulary.json")
    }

    pub fn tfidf_model(&self) -> PathBuf {
        self.rep_dir(Rep::Tfidf).join("model.json")
    }

    pub fn embeddings(&self) -> PathBuf {
        self.rep_dir(Rep::Word2vec).join("embeddings.txt")
    }

    pub fn embedding_losses(&self) -> PathBuf {
        self.rep_dir(Rep::Word2vec).join("losses.json")
    }

    pub fn condition_encoder(&self) -> PathBuf {
        self.rep_dir(Rep::Manual).join("encoder.json")
    }

    /// Vectorized rows: coordinate text for sparse representations,
    /// tab-separated dense rows otherwise.
    pub fn feature_matrix(&self, rep: Rep, split: DataSplit) -> PathBuf {
        let extension = if rep.is_sparse() { "coo" } else { "tsv" };
        self.rep_dir(rep).join(format!("{}.{extension}", split.name()))
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn model(&self, id: &str) -> PathBuf {
        self.models_dir().join(format!("{id}.json"))
    }

    pub fn evaluation_csv(&self) -> PathBuf {
        self.root.join("reports").join("evaluation.csv")
    }

    pub fn evaluation_json(&self) -> PathBuf {
        self.root.join("reports").join("evaluation.json")
    }

    pub fn recommendations_csv(&self) -> PathBuf {
        self.root.join("recommend").join("recommendations.csv")
    }

    pub fn recommendations_json(&self) -> PathBuf {
        self.root.join("recommend").join("recommendations.json")
    }
}

/// Error when a stage dependency is not on disk, naming the missing file.
pub fn require(path: PathBuf, hint: &str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(anyhow::Error::new(Error::MissingArtifact(path)).context(hint.to_string()))
    }
}

/// Stream a file through a closure, writing to a temporary sibling and
/// renaming into place only on success.
pub fn write_atomic_with<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(parent)
        .with_context(|| format!("creating directory {}", parent.display()))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| anyhow::anyhow!("artifact path {} has no file name", path.display()))?;
    let temp = parent.join(format!(
        ".{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));

    let result = (|| {
        let mut writer = BufWriter::new(
            File::create(&temp).with_context(|| format!("creating {}", temp.display()))?,
        );
        write(&mut writer)?;
        writer.flush()?;
        Ok(())
    })();
    if let Err(err) = result {
        let _ = fs::remove_file(&temp);
        return Err(err);
    }
    fs::rename(&temp, path)
        .with_context(|| format!("renaming {} into place", path.display()))?;
    Ok(())
}

/// Atomically replace `path` with `bytes`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic_with(path, |writer| {
        writer.write_all(bytes)?;
        Ok(())
    })
}

/// Serialize a value as pretty JSON and write it atomically.
pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Write one compact JSON document per line, atomically.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_atomic_with(path, |writer| {
        for item in items {
            serde_json::to_writer(&mut *writer, item)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    })
}

/// Read a JSON-lines file written by [`write_jsonl`].
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut items = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .with_context(|| format!("{}: bad JSON on line {}", path.display(), index + 1))?;
        items.push(item);
    }
    Ok(items)
}

/// Record of one completed stage: what ran, under which config, and what
/// it wrote (paths relative to the output directory).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub config_hash: String,
    pub created_utc: String,
    pub outputs: Vec<String>,
}

/// Write the manifest for a finished stage.
pub fn write_manifest(paths: &Paths, stage: &str, config_hash: &str, outputs: &[PathBuf]) -> Result<()> {
    let relative: Vec<String> = outputs
        .iter()
        .map(|path| {
            let rel = path.strip_prefix(paths.root()).unwrap_or(path);
            rel.components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/")
        })
        .collect();
    let manifest = StageManifest {
        stage: stage.to_string(),
        config_hash: config_hash.to_string(),
        created_utc: Utc::now().to_rfc3339(),
        outputs: relative,
    };
    write_json_pretty(&paths.manifest(stage), &manifest)
}

/// Whether a stage already ran under this config with all outputs intact.
pub fn stage_cached(paths: &Paths, stage: &str, config_hash: &str) -> bool {
    let Ok(text) = fs::read_to_string(paths.manifest(stage)) else {
        return false;
    };
    let Ok(manifest) = serde_json::from_str::<StageManifest>(&text) else {
        return false;
    };
    manifest.config_hash == config_hash
        && manifest
            .outputs
            .iter()
            .all(|rel| paths.root().join(rel).exists())
}
