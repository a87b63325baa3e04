use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embed::EmbedConfig;
use crate::error::{Error, Result};
use crate::nnet::{GridSpec, TrainConfig, Variant, DEFAULT_BRANCH_HIDDEN, DEFAULT_TRUNK};
use crate::seed::derive_seed;
use crate::synth::SynthConfig;
use crate::weak::{BootstrapThresholds, BtmConfig};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Global seed; every stage derives its own from this and its name.
    pub seed: u64,
    pub paths: PathsConfig,
    pub synth: SynthConfig,
    pub ingest: IngestConfig,
    pub label: LabelConfig,
    pub embed: EmbedSection,
    pub train: TrainSection,
    pub eval: EvalConfig,
}

/// Input locations. Unset inputs fall back to the files the `synth` stage
/// writes into the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub out_dir: PathBuf,
    pub transactions: Option<PathBuf>,
    /// Seed keyword file; the bundled list when unset.
    pub taxonomy: Option<PathBuf>,
    pub pretrained_vectors: Option<PathBuf>,
    /// Ground-truth labels for scoring restaurants the weak labeler missed.
    pub truth: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            out_dir: PathBuf::from("out"),
            transactions: None,
            taxonomy: None,
            pretrained_vectors: None,
            truth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Abort on the first malformed row instead of reporting it.
    pub strict: bool,
    /// Drop merchants whose name spans at least this many ZIP codes; 0 keeps all.
    pub chain_min_zips: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicMode {
    Off,
    /// Fit the topic model and write topic and coherence reports.
    #[default]
    Diagnostic,
    /// Also label keyword-unlabeled restaurants from confident topics.
    Augment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelConfig {
    pub bootstrap: BootstrapThresholds,
    pub rounds: usize,
    pub topics: TopicMode,
    pub min_posterior: f64,
    pub btm: BtmConfig,
    /// Topic counts for the coherence sweep; empty scores only `btm.k`.
    pub coherence_k: Vec<usize>,
    pub strata: usize,
    pub cap_ratio: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            bootstrap: BootstrapThresholds::default(),
            rounds: 1,
            topics: TopicMode::Diagnostic,
            min_posterior: 0.8,
            btm: BtmConfig::default(),
            coherence_k: Vec::new(),
            strata: 1,
            cap_ratio: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSection {
    pub micro: EmbedConfig,
    #[serde(rename = "macro")]
    pub macro_: EmbedConfig,
}

impl Default for EmbedSection {
    fn default() -> Self {
        EmbedSection {
            micro: EmbedConfig::micro(),
            macro_: EmbedConfig::macro_(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub variant: Variant,
    pub branch_hidden: usize,
    pub trunk: Vec<usize>,
    pub train_frac: f64,
    /// Pick dropout, batch size and learning rate by cross-validation.
    pub grid: bool,
    pub folds: usize,
    pub grid_values: GridSpec,
    pub sgd: TrainConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            variant: Variant::ResidualDeep,
            branch_hidden: DEFAULT_BRANCH_HIDDEN,
            trunk: DEFAULT_TRUNK.to_vec(),
            train_frac: 0.8,
            grid: false,
            folds: 5,
            grid_values: GridSpec::default(),
            sgd: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Retrain once per removed feature block.
    pub ablation: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { ablation: true }
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parse one `dotted.key=value` override. The value is read as a TOML value
/// and falls back to a plain string.
fn parse_override(spec: &str) -> Result<(Vec<String>, toml::Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override {spec:?}: expected key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::config(format!("override {spec:?}: bad key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.split('.').map(str::to_string).collect(), value))
}

fn set_path(root: &mut toml::Value, path: &[String], value: toml::Value) -> Result<()> {
    let mut node = root;
    for (i, part) in path.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("override: {} is not a table", path[..i].join("."))))?;
        if i + 1 == path.len() {
            table.insert(part.clone(), value);
            return Ok(());
        }
        node = table
            .entry(part.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Ok(())
}

impl PipelineConfig {
    /// Build a config from an optional TOML document plus `key=value`
    /// overrides. Values missing from the document keep their defaults;
    /// `synth.preset = "strongly_separated"` swaps in that generator preset
    /// before the document's own synth fields apply.
    pub fn from_toml(text: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut user = match text {
            Some(t) => t
                .parse::<toml::Table>()
                .map(toml::Value::Table)
                .map_err(|e| Error::config(format!("config: {e}")))?,
            None => toml::Value::Table(toml::Table::new()),
        };
        for o in overrides {
            let (path, value) = parse_override(o)?;
            set_path(&mut user, &path, value)?;
        }
        let mut defaults = PipelineConfig::default();
        let preset = user
            .get_mut("synth")
            .and_then(|s| s.as_table_mut())
            .and_then(|s| s.remove("preset"));
        match preset.as_ref().map(|p| p.as_str()) {
            None => {}
            Some(Some("default")) => {}
            Some(Some("strongly_separated")) => defaults.synth = SynthConfig::strongly_separated(),
            Some(_) => {
                return Err(Error::config(
                    "synth.preset: expected \"default\" or \"strongly_separated\"",
                ))
            }
        }
        let mut merged = toml::Value::try_from(&defaults).map_err(|e| Error::config(format!("config: {e}")))?;
        merge(&mut merged, user);
        let cfg: PipelineConfig = serde_path_to_error::deserialize(merged).map_err(|e| {
            let path = e.path().to_string();
            Error::config(format!("config field {path}: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        if !path.exists() {
            return Err(Error::config(format!("config file {} does not exist", path.display())));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(Some(&text), overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::config("seed must fit in 63 bits"));
        }
        self.synth.validate()?;
        self.label.bootstrap.validate()?;
        self.label.btm.validate()?;
        if !(self.label.min_posterior > 0.0 && self.label.min_posterior <= 1.0) {
            return Err(Error::config("label.min_posterior must be in (0, 1]"));
        }
        if self.label.strata == 0 || !(self.label.cap_ratio >= 1.0) {
            return Err(Error::config("label.strata must be >= 1 and label.cap_ratio >= 1"));
        }
        self.embed.micro.validate()?;
        self.embed.macro_.validate()?;
        let t = &self.train;
        if !(t.train_frac > 0.0 && t.train_frac < 1.0) {
            return Err(Error::config("train.train_frac must be in (0, 1)"));
        }
        if t.folds < 2 {
            return Err(Error::config("train.folds must be >= 2"));
        }
        if t.branch_hidden == 0 || t.trunk.contains(&0) {
            return Err(Error::config("train: hidden sizes must be positive"));
        }
        t.sgd.validate()?;
        Ok(())
    }

    /// Seed of a named stage, kept to 63 bits so it fits a TOML integer.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage) & i64::MAX as u64
    }

    /// The config with every nested seed replaced by its derived value.
    pub fn effective(&self) -> PipelineConfig {
        let mut c = self.clone();
        c.synth.seed = self.stage_seed("synth");
        c.label.btm.seed = self.stage_seed("label");
        c.embed.micro.seed = self.stage_seed("embed.micro");
        c.embed.macro_.seed = self.stage_seed("embed.macro");
        c.train.sgd.seed = self.stage_seed("train");
        c
    }
}
