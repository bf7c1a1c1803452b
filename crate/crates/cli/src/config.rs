//! Command-line grammar and the optional TOML run file.
//!
//! Every field of [`RunConfig`] can come from the file or from a flag; a flag
//! wins whenever it is given.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hstc::data::{cube_paths, Provenance};
use hstc::fnn::HIDDEN_UNITS_LARGE;
use hstc::TrainConfig;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "hstc", version, about = "Rank-1 tensor classifiers for hyperspectral cubes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split, normalize, fit and save a model.
    Train(TrainArgs),
    /// Accuracy on the test pixels of the recorded split.
    Eval(EvalArgs),
    /// Classification and misclassification maps as binary PGM.
    Map(MapArgs),
    /// Rank spectral bands by the weights of a trained tensor LR model.
    Bands(BandsArgs),
    /// Write the planted-band synthetic cube and its labels.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModelKind {
    TensorLr,
    Rank1Fnn,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TensorLr => "tensor_lr",
            ModelKind::Rank1Fnn => "rank1_fnn",
        }
    }
}

/// Contents of a `--config` file. Relative paths are taken as given, i.e.
/// relative to the working directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cube: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model_type: Option<ModelKind>,
    pub window: Option<usize>,
    pub hidden: Option<usize>,
    pub samples_per_class: Option<usize>,
    pub seed: Option<u64>,
    pub max_sweeps: Option<usize>,
    pub inner_steps: Option<usize>,
    pub learning_rate: Option<f64>,
    pub l2: Option<f64>,
    pub rel_tol: Option<f64>,
    pub init_scale: Option<f64>,
    pub augment_ones: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| {
            let msg = e.message().replace('\n', " ");
            CliError::Usage(format!("{}: {msg}", path.display()))
        })
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// TOML file with any of the options below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cube header, payload or bare stem.
    #[arg(long)]
    pub cube: Option<PathBuf>,
    /// Label file; defaults to `<stem>.labels.raw`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Output directory (model.json, trace.csv).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model_type: Option<ModelKind>,
    /// Odd patch side length.
    #[arg(long)]
    pub window: Option<usize>,
    /// Hidden units of the FNN.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub samples_per_class: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    #[arg(long)]
    pub inner_steps: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    /// Append a constant band (acts as a bias).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub augment_ones: Option<bool>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub cube: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Overrides the seed recorded in the model file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples_per_class: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BandsArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// How many bands to list.
    #[arg(long, short, default_value_t = 10)]
    pub n: usize,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output stem; writes `<stem>.json`, `<stem>.raw`, `<stem>.labels.raw`.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Fully resolved `train` settings.
#[derive(Debug, Clone)]
pub struct TrainPlan {
    pub cube: PathBuf,
    pub labels: PathBuf,
    pub out: PathBuf,
    pub model_type: ModelKind,
    pub window: usize,
    pub hidden: usize,
    pub samples_per_class: usize,
    pub train: TrainConfig,
}

impl TrainPlan {
    pub fn provenance(&self) -> Provenance {
        Provenance {
            seed: self.train.seed,
            samples_per_class: self.samples_per_class,
            window: self.window,
        }
    }
}

impl TrainArgs {
    pub fn resolve(self) -> Result<TrainPlan, CliError> {
        let file = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let d = TrainConfig::default();
        let cube = self
            .cube
            .or(file.cube)
            .ok_or_else(|| CliError::Usage("no cube given (--cube or `cube` in the config)".into()))?;
        let labels = self.labels.or(file.labels).unwrap_or_else(|| default_labels(&cube));
        let out = self
            .out
            .or(file.out)
            .ok_or_else(|| CliError::Usage("no output directory given (--out or `out` in the config)".into()))?;
        let plan = TrainPlan {
            cube,
            labels,
            out,
            model_type: self.model_type.or(file.model_type).unwrap_or(ModelKind::TensorLr),
            window: self.window.or(file.window).unwrap_or(5),
            hidden: self.hidden.or(file.hidden).unwrap_or(HIDDEN_UNITS_LARGE),
            samples_per_class: self.samples_per_class.or(file.samples_per_class).unwrap_or(50),
            train: TrainConfig {
                max_sweeps: self.max_sweeps.or(file.max_sweeps).unwrap_or(d.max_sweeps),
                inner_steps: self.inner_steps.or(file.inner_steps).unwrap_or(d.inner_steps),
                learning_rate: self.learning_rate.or(file.learning_rate).unwrap_or(d.learning_rate),
                l2: self.l2.or(file.l2).unwrap_or(d.l2),
                rel_tol: self.rel_tol.or(file.rel_tol).unwrap_or(d.rel_tol),
                seed: self.seed.or(file.seed).unwrap_or(d.seed),
                init_scale: self.init_scale.or(file.init_scale).unwrap_or(d.init_scale),
                augment_ones: self.augment_ones.or(file.augment_ones).unwrap_or(d.augment_ones),
            },
        };
        check_window(plan.window)?;
        if plan.samples_per_class == 0 {
            return Err(CliError::Usage("samples_per_class must be at least 1".into()));
        }
        if plan.model_type == ModelKind::Rank1Fnn && plan.hidden == 0 {
            return Err(CliError::Usage("hidden must be at least 1".into()));
        }
        plan.train.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        check_inputs(&plan.cube, &plan.labels)?;
        Ok(plan)
    }
}

/// `<stem>.labels.raw` next to the cube.
pub fn default_labels(cube: &Path) -> PathBuf {
    let mut stem = cube_paths(cube).0.with_extension("").into_os_string();
    stem.push(".labels.raw");
    stem.into()
}

pub fn check_window(window: usize) -> Result<(), CliError> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(CliError::Usage(format!("window must be odd and positive, got {window}")));
    }
    Ok(())
}

/// Missing inputs are usage errors, reported before any work starts.
pub fn check_inputs(cube: &Path, labels: &Path) -> Result<(), CliError> {
    let (header, payload) = cube_paths(cube);
    for p in [&header, &payload, &labels.to_path_buf()] {
        if !p.is_file() {
            return Err(CliError::Usage(format!("file not found: {}", p.display())));
        }
    }
    Ok(())
}
