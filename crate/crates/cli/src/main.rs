use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tabletrace::pipeline::{Manifest, Pipeline, PipelineConfig, Stage};
use tabletrace::Error;

/// Cuisine inference from card transaction logs.
#[derive(Parser)]
#[command(name = "tabletrace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic transaction log with ground truth.
    Synth(Common),
    /// Weakly label restaurants from their names.
    Label(LabelArgs),
    /// Extract the statistical feature blocks.
    Features(Common),
    /// Train the micro, macro and name embeddings.
    Embed(Common),
    /// Train the classifier on the weak labels.
    Train(TrainArgs),
    /// Score the trained model and run the ablation.
    Eval(Common),
    /// Write the per-cuisine summary report.
    Report(Common),
    /// Run every stage in order.
    Pipeline(PipelineArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML config file; built-in defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for all artifacts.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override any config value, e.g. `--set train.sgd.lr=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Clone)]
struct LabelArgs {
    #[command(flatten)]
    common: Common,
    /// Bootstrapping rounds.
    #[arg(long)]
    rounds: Option<usize>,
    /// Label keyword-unlabeled restaurants from confident topics.
    #[arg(long)]
    topic_augment: bool,
}

#[derive(Args, Clone)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// residual_deep, deep, shallow or logistic.
    #[arg(long)]
    variant: Option<String>,
    /// Weight the loss by inverse class frequency.
    #[arg(long)]
    class_weights: bool,
    /// Choose dropout, batch size and learning rate by cross-validation.
    #[arg(long)]
    grid: bool,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    #[command(flatten)]
    label: LabelArgs,
    /// Classifier variant, as for `train`.
    #[arg(long)]
    variant: Option<String>,
    /// Weight the loss by inverse class frequency.
    #[arg(long)]
    class_weights: bool,
    /// Cross-validated hyperparameter grid before the final fit.
    #[arg(long)]
    grid: bool,
}

fn label_overrides(a: &LabelArgs, out: &mut Vec<String>) {
    if let Some(r) = a.rounds {
        out.push(format!("label.rounds={r}"));
    }
    if a.topic_augment {
        out.push("label.topics=\"augment\"".into());
    }
}

fn train_overrides(variant: &Option<String>, class_weights: bool, grid: bool, out: &mut Vec<String>) {
    if let Some(v) = variant {
        out.push(format!("train.variant=\"{v}\""));
    }
    if class_weights {
        out.push("train.sgd.class_weights=true".into());
    }
    if grid {
        out.push("train.grid=true".into());
    }
}

fn load_config(common: &Common, extra: Vec<String>) -> Result<PipelineConfig, Error> {
    let mut overrides = Vec::new();
    if let Some(s) = common.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(d) = &common.out_dir {
        overrides.push(format!("paths.out_dir={}", toml::Value::String(d.to_string_lossy().into_owned())));
    }
    overrides.extend(extra);
    overrides.extend(common.overrides.iter().cloned());
    match &common.config {
        Some(path) => PipelineConfig::load(path, &overrides),
        None => PipelineConfig::from_toml(None, &overrides),
    }
}

fn describe(m: &Manifest) {
    let stats: Vec<String> = m.stats.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!(
        "{:<9} {:>8} ms  {} outputs  {}",
        m.stage,
        m.duration_ms,
        m.outputs.len(),
        stats.join(" ")
    );
}

fn run(cli: Cli) -> Result<(), Error> {
    let (common, extra, stages): (Common, Vec<String>, Option<Stage>) = match cli.command {
        Command::Synth(c) => (c, vec![], Some(Stage::Synth)),
        Command::Label(a) => {
            let mut o = Vec::new();
            label_overrides(&a, &mut o);
            (a.common, o, Some(Stage::Label))
        }
        Command::Features(c) => (c, vec![], Some(Stage::Features)),
        Command::Embed(c) => (c, vec![], Some(Stage::Embed)),
        Command::Train(a) => {
            let mut o = Vec::new();
            train_overrides(&a.variant, a.class_weights, a.grid, &mut o);
            (a.common, o, Some(Stage::Train))
        }
        Command::Eval(c) => (c, vec![], Some(Stage::Eval)),
        Command::Report(c) => (c, vec![], Some(Stage::Report)),
        Command::Pipeline(a) => {
            let mut o = Vec::new();
            label_overrides(&a.label, &mut o);
            train_overrides(&a.variant, a.class_weights, a.grid, &mut o);
            (a.label.common, o, None)
        }
    };
    let config = load_config(&common, extra)?;
    let pipeline = Pipeline::new(&config)?;
    match stages {
        Some(stage) => describe(&pipeline.run(stage)?),
        None => {
            for m in pipeline.run_all()? {
                describe(&m);
            }
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::MissingArtifact { .. } => 3,
        Error::Data(_) | Error::Malformed { .. } => 4,
        Error::Io { .. } => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
