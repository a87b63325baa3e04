//! The closed-loop pipeline: synthetic data, weak labels, statistical and
//! embedding features, classifier training, evaluation and the cuisine
//! report. Each stage reads its predecessors' files from the output
//! directory and writes its own artifacts plus a manifest.

mod assemble;
mod config;
mod manifest;
mod stages;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

pub use assemble::{assemble_features, block_names, MACRO_BLOCK, MICRO_BLOCK, NAME_BLOCK};
pub use config::{
    EmbedSection, EvalConfig, IngestConfig, LabelConfig, PathsConfig, PipelineConfig, TopicMode, TrainSection,
};
pub use manifest::{file_sha256, flatten_toml, Manifest};
pub use stages::{read_predictions, read_split};

use crate::error::{Error, Result};
use crate::seed::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Synth,
    Label,
    Features,
    Embed,
    Train,
    Eval,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Synth,
        Stage::Label,
        Stage::Features,
        Stage::Embed,
        Stage::Train,
        Stage::Eval,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Label => "label",
            Stage::Features => "features",
            Stage::Embed => "embed",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

/// Artifact file names inside the output directory.
pub mod files {
    pub const TRANSACTIONS: &str = "transactions.csv";
    pub const TRUTH: &str = "truth.tsv";
    pub const PARTY_SIZES: &str = "party_sizes.tsv";
    pub const NAME_VECTORS: &str = "name_vectors.txt";
    pub const LABELS: &str = "labels.tsv";
    pub const BOOTSTRAP: &str = "bootstrap.tsv";
    pub const LABELING_WORDS: &str = "labeling_words.txt";
    pub const REJECTS: &str = "rejects.tsv";
    pub const TOPICS: &str = "topics.tsv";
    pub const COHERENCE: &str = "coherence.tsv";
    pub const FEATURES: &str = "features.tsv";
    pub const EMBED_MICRO: &str = "embed_micro.txt";
    pub const EMBED_MACRO: &str = "embed_macro.txt";
    pub const EMBED_NAME: &str = "embed_name.txt";
    pub const MODEL: &str = "model.json";
    pub const TRAIN_CONFIG: &str = "train_config.json";
    pub const LOSS_CURVE: &str = "loss_curve.tsv";
    pub const SPLIT: &str = "split.tsv";
    pub const GRID: &str = "grid.tsv";
    pub const METRICS: &str = "metrics.tsv";
    pub const METRICS_TEXT: &str = "metrics.txt";
    pub const CONFUSION: &str = "confusion.tsv";
    pub const TEST_PREDICTIONS: &str = "test_predictions.tsv";
    pub const PREDICTIONS: &str = "predictions.tsv";
    pub const METRICS_UNLABELED: &str = "metrics_unlabeled.tsv";
    pub const CONFUSION_UNLABELED: &str = "confusion_unlabeled.tsv";
    pub const ABLATION: &str = "ablation.tsv";
    pub const SUMMARY: &str = "summary.tsv";
    pub const SUMMARY_TEXT: &str = "summary.txt";
    pub const REPORT: &str = "report.txt";
}

/// A configured pipeline bound to its output directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    /// Hash of the effective config without the output directory.
    config_sha256: String,
}

impl Pipeline {
    /// Validates the config and fixes every nested seed to its derived value.
    pub fn new(config: &PipelineConfig) -> Result<Self> {
        config.validate()?;
        let config = config.effective();
        let mut hashed = config.clone();
        hashed.paths.out_dir = PathBuf::new();
        let config_sha256 = sha256_hex(hashed.to_toml().as_bytes());
        Ok(Pipeline { config, config_sha256 })
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.paths.out_dir
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.out_dir().join(file)
    }

    pub fn manifest_path(&self, stage: Stage) -> PathBuf {
        self.out_dir().join("manifests").join(format!("{stage}.manifest"))
    }

    pub fn config_sha256(&self) -> &str {
        &self.config_sha256
    }

    pub fn transactions_path(&self) -> PathBuf {
        self.config
            .paths
            .transactions
            .clone()
            .unwrap_or_else(|| self.path(files::TRANSACTIONS))
    }

    /// Run one stage and write its manifest.
    pub fn run(&self, stage: Stage) -> Result<Manifest> {
        let out = self.out_dir();
        std::fs::create_dir_all(out.join("manifests")).map_err(|e| Error::io(out, e))?;
        let start = Instant::now();
        let mut run = stages::StageRun::new(self);
        match stage {
            Stage::Synth => stages::synth(self, &mut run)?,
            Stage::Label => stages::label(self, &mut run)?,
            Stage::Features => stages::features(self, &mut run)?,
            Stage::Embed => stages::embed(self, &mut run)?,
            Stage::Train => stages::train(self, &mut run)?,
            Stage::Eval => stages::eval(self, &mut run)?,
            Stage::Report => stages::report(self, &mut run)?,
        }
        let value: toml::Value = toml::Value::try_from(&self.config).expect("config converts");
        let manifest = Manifest {
            stage: stage.name().to_string(),
            seed: self.config.stage_seed(stage.name()),
            config_sha256: self.config_sha256.clone(),
            inputs: run.inputs,
            outputs: run.outputs,
            stats: run.stats,
            config: flatten_toml(&value),
            duration_ms: start.elapsed().as_millis(),
        };
        let path = self.manifest_path(stage);
        std::fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }

    /// Every stage in order. The generator runs only when no transaction
    /// file is configured.
    pub fn run_all(&self) -> Result<Vec<Manifest>> {
        Stage::ALL
            .into_iter()
            .filter(|&s| s != Stage::Synth || self.config.paths.transactions.is_none())
            .map(|s| self.run(s))
            .collect()
    }
}
