//! Command-line experiments over `metores-core`.
//!
//! Every command writes its primary outputs deterministically; wall-clock
//! timestamps only ever go to a `run.log` sidecar next to them.

mod commands;
pub mod error;
pub mod manifest;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::{CliError, EXIT_RUNTIME, EXIT_VALIDATION};
pub use manifest::{ExperimentManifest, GeoparseManifest};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "METORES_OUT";

#[derive(Debug, Parser)]
#[command(name = "metores", version, about = "Context-only metonymy resolution experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Txt,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Txt => "txt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Plain,
    Aug,
    Mask,
}

impl From<VariantArg> for metores_core::Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Plain => metores_core::Variant::Plain,
            VariantArg::Aug => metores_core::Variant::Augmented,
            VariantArg::Mask => metores_core::Variant::Masked,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output directory [default: manifest `out`, else $METORES_OUT/<name>, else runs/<name>]
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dataset statistics for one or more corpora.
    Stats {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Raw dataset format; canonical JSON lines when omitted.
        #[arg(long)]
        source_format: Option<String>,
        /// Write `stats.<format>` here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Txt)]
        format: Format,
    },
    /// Converts a raw dataset to canonical JSON lines.
    Convert {
        input: PathBuf,
        #[arg(long)]
        source_format: String,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        gwn_associative_as_metonymic: bool,
    },
    /// Writes a synthetic corpus as train/dev/test canonical files.
    Synth {
        /// separable, lexical_bias or skewed_names
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trains one model per seed and summarizes the runs.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Overrides the manifest seeds, e.g. `1-10` or `1,4,7`.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        /// Also report the majority vote of all runs.
        #[arg(long)]
        ensemble: bool,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Scores checkpoints on a test set, optionally as an ensemble.
    Eval {
        /// Evaluates the checkpoints of this experiment on its test set.
        #[arg(long, conflicts_with_all = ["test"])]
        manifest: Option<PathBuf>,
        /// Output directory of the training run [default: as `train` resolves it]
        #[arg(long, requires = "manifest")]
        run: Option<PathBuf>,
        #[arg(long = "checkpoint")]
        checkpoints: Vec<PathBuf>,
        #[arg(long, requires = "checkpoints")]
        test: Option<PathBuf>,
        #[arg(long)]
        source_format: Option<String>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Dataset label for the report.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        ensemble: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Trains on each source experiment and tests on each target's test set.
    Crossdomain {
        /// Experiment manifests, or one crossdomain manifest listing
        /// `experiments` and `pairs`.
        #[arg(long = "manifest", required = true, num_args = 1..)]
        manifests: Vec<PathBuf>,
        /// Restricts the matrix to `source:target` pairs of dataset labels.
        #[arg(long = "pair")]
        pairs: Vec<String>,
        #[arg(long = "variant", value_enum)]
        variants: Vec<VariantArg>,
        #[arg(long)]
        seeds: Option<String>,
        /// With no explicit pairs, also evaluate each experiment on its own
        /// test set.
        #[arg(long)]
        include_diagonal: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Detects and classifies toponyms in raw documents.
    Geoparse {
        #[arg(long, conflicts_with_all = ["docs", "gazetteer", "checkpoint"])]
        manifest: Option<PathBuf>,
        #[arg(long, requires_all = ["gazetteer", "checkpoint"])]
        docs: Option<PathBuf>,
        #[arg(long)]
        gazetteer: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Report precision/recall/F1 per fold of documents.
        #[arg(long)]
        folds: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Per-layer attention on the target across samples.
    Attention {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        source_format: Option<String>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Layers numbered below this are pooled into one group.
        #[arg(long, default_value_t = 3)]
        merge_below: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    commands::dispatch(cli.command)
}
