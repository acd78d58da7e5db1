use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use glove_core::weighting::{DEFAULT_ALPHA, DEFAULT_LAMBDA, DEFAULT_X_MAX};
use glove_core::{CombineMode, WeightingSpec};
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "glove", version, about = "Train and compare GloVe embeddings under different co-occurrence weightings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a frequency-ranked vocabulary from a corpus.
    Vocab(VocabArgs),
    /// Count windowed co-occurrences into a binary record file.
    Cooccur(CooccurArgs),
    /// Shuffle a binary record file.
    Shuffle(ShuffleArgs),
    /// Train word vectors on co-occurrence records.
    Train(TrainArgs),
    /// Evaluate vectors on an analogy question file.
    Eval(EvalArgs),
    /// Cosine similarity for word pairs.
    Similar(SimilarArgs),
    /// Solve "a is to b as c is to ?".
    Analogy(AnalogyArgs),
    /// Train and evaluate once per weighting function with the same seed.
    BenchCompare(BenchArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct TextArgs {
    /// ASCII-lowercase tokens.
    #[arg(long)]
    pub lowercase: bool,
    /// Let context windows cross line boundaries.
    #[arg(long)]
    pub no_line_breaks: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct VocabArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
    #[command(flatten)]
    pub text: TextArgs,
    /// Overwrite existing outputs.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct WindowArgs {
    /// Context positions scanned on each side.
    #[arg(long, default_value_t = 15)]
    pub window: usize,
    /// Only count context words to the left of the target.
    #[arg(long)]
    pub asymmetric: bool,
    /// Add 1 per pair instead of 1/distance.
    #[arg(long)]
    pub no_distance_weighting: bool,
}

impl WindowArgs {
    pub fn config(&self) -> glove_core::WindowConfig {
        glove_core::WindowConfig {
            window: self.window,
            symmetric: !self.asymmetric,
            distance_weighting: !self.no_distance_weighting,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CooccurArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub text: TextArgs,
    /// Write `target context value` text lines instead of binary records.
    #[arg(long)]
    pub text_output: bool,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ShuffleArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub force: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingKind {
    PowerClip,
    Exp,
    Constant,
}

#[derive(Debug, Args, Serialize)]
pub struct WeightingParams {
    /// Power-clip cutoff.
    #[arg(long, default_value_t = DEFAULT_X_MAX)]
    pub x_max: f64,
    /// Power-clip exponent.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Exponential saturation rate.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
}

impl WeightingParams {
    pub fn power_clip(&self) -> Result<WeightingSpec> {
        WeightingSpec::power_clip(self.x_max, self.alpha).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn exp(&self) -> Result<WeightingSpec> {
        WeightingSpec::exp_saturating(self.lambda).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct WeightingArgs {
    #[arg(long, value_enum, default_value_t = WeightingKind::PowerClip)]
    pub weighting: WeightingKind,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: WeightingParams,
}

impl WeightingArgs {
    pub fn spec(&self) -> Result<WeightingSpec> {
        match self.weighting {
            WeightingKind::PowerClip => self.params.power_clip(),
            WeightingKind::Exp => self.params.exp(),
            WeightingKind::Constant => Ok(WeightingSpec::Constant),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombineArg {
    Target,
    Sum,
    Concat,
}

impl From<CombineArg> for CombineMode {
    fn from(c: CombineArg) -> Self {
        match c {
            CombineArg::Target => CombineMode::TargetOnly,
            CombineArg::Sum => CombineMode::Sum,
            CombineArg::Concat => CombineMode::Concat,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Fit ln(M + 1) instead of ln M.
    #[arg(long)]
    pub log_smoothing: bool,
    /// How word and context vectors are combined in the output.
    #[arg(long, value_enum, default_value_t = CombineArg::Sum)]
    pub combine: CombineArg,
}

impl ModelArgs {
    pub fn train_config(&self, weighting: WeightingSpec) -> Result<glove_core::TrainConfig> {
        let cfg = glove_core::TrainConfig {
            dim: self.dim,
            epochs: self.epochs,
            initial_lr: self.lr,
            weighting,
            seed: self.seed,
            threads: self.threads,
            log_smoothing: self.log_smoothing,
            ..Default::default()
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Binary co-occurrence records.
    #[arg(long)]
    pub cooccur: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Vector text file to write.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Loss CSV; defaults to the output path with extension `loss.csv`.
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub weighting: WeightingArgs,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub vectors: PathBuf,
    #[arg(long)]
    pub questions: PathBuf,
    /// Also write `category,kind,attempted,correct,skipped,accuracy` rows.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SimilarArgs {
    #[arg(long)]
    pub vectors: PathBuf,
    /// File with one `word word` pair per line.
    #[arg(long)]
    pub pairs: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalogyArgs {
    #[arg(long)]
    pub vectors: PathBuf,
    pub a: String,
    pub b: String,
    pub c: String,
    /// Print this many ranked candidates.
    #[arg(long, default_value_t = 1)]
    pub top: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub questions: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Only use this many leading bytes of the corpus (cut back to a word boundary).
    #[arg(long)]
    pub max_bytes: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub weighting: WeightingParams,
    /// Evaluate analogies every N epochs (the final epoch is always evaluated).
    #[arg(long, default_value_t = 0)]
    pub eval_every: usize,
    /// Optional `word word` pair file for a similarity table.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub no_line_breaks: bool,
    #[arg(long)]
    pub force: bool,
}
