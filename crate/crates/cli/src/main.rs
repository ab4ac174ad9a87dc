mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netnews::dataset::Network;
use netnews::pipeline::{EmbedMethod, TextClassifier};
use netnews::walks::DirectionMode;

use crate::commands::CliError;

/// Fake-news detection from the social graph of the users who share it.
#[derive(Debug, Parser)]
#[command(name = "netnews", version, args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub globals: Globals,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Globals {
    /// Master seed for every stochastic stage.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads; 1 keeps every stage bit-reproducible.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// Write into a non-empty output directory.
    #[arg(long, global = true)]
    pub force: bool,

    /// Flat `key=value` file of flag defaults; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a dataset bundle from a follower edge list and an article file.
    Ingest(IngestArgs),
    /// Generate a synthetic echo-chamber corpus.
    Synth(SynthArgs),
    /// Train user embeddings on the follower or friendship graph.
    Embed(EmbedArgs),
    /// Classify articles from user embeddings over fractions and seeds.
    Experiment(ExperimentArgs),
    /// Explained variance and 2-D projection of engaged users.
    Analyze(AnalyzeArgs),
    /// TF-IDF text classifier over fractions and seeds.
    Baseline(BaselineArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct IngestArgs {
    /// Tab-separated `follower<TAB>followee` lines.
    #[arg(long)]
    pub edges: PathBuf,
    /// JSON-lines article records.
    #[arg(long)]
    pub articles: PathBuf,
    /// Unengaged users with fewer follower-graph edges are dropped.
    #[arg(long, default_value_t = netnews::pipeline::DEFAULT_MIN_EDGES)]
    pub min_edges: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SynthArgs {
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub communities: Option<usize>,
    #[arg(long)]
    pub p_in: Option<f64>,
    #[arg(long)]
    pub p_out: Option<f64>,
    #[arg(long)]
    pub articles: Option<usize>,
    #[arg(long)]
    pub fake_fraction: Option<f64>,
    /// Probability an engager comes from the article's home community.
    #[arg(long)]
    pub homophily: Option<f64>,
    #[arg(long)]
    pub engagers_min: Option<usize>,
    #[arg(long)]
    pub engagers_max: Option<usize>,
    /// One-directional follow probability for unlinked cross-community pairs.
    #[arg(long)]
    pub cross_noise: Option<f64>,
    /// Share of tokens drawn from the shared vocabulary instead of the topic.
    #[arg(long)]
    pub text_noise: Option<f64>,
    #[arg(long)]
    pub tokens_per_article: Option<usize>,
    #[arg(long)]
    pub tokens_per_tweet: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbeddingFormat {
    Text,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureArg {
    Lookup,
    Degree,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EmbedArgs {
    /// Bundle directory written by `ingest`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// deepwalk, sage or cgcn.
    #[arg(long)]
    pub method: EmbedMethod,
    /// fo (follower) or fr (friendship).
    #[arg(long, default_value = "fr")]
    pub network: Network,
    #[arg(long, value_enum, default_value_t = EmbeddingFormat::Text)]
    pub format: EmbeddingFormat,
    #[arg(long)]
    pub walks_per_node: Option<usize>,
    #[arg(long)]
    pub walk_length: Option<usize>,
    /// sym (treat edges as undirected) or out.
    #[arg(long)]
    pub walk_direction: Option<DirectionMode>,
    /// Output embedding dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub min_learning_rate: Option<f64>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long, value_enum)]
    pub features: Option<FeatureArg>,
    #[arg(long)]
    pub feature_dim: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Neighbour sample size per layer, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sample_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub partitions: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Training fractions, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7,0.9")]
    pub fractions: Vec<f64>,
    /// Split seeds, comma separated; defaults to the global seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Embedding file from `embed`.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Classifier epochs.
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f64,
    /// Prediction files to compare pairwise with McNemar's test.
    #[arg(long, value_delimiter = ',')]
    pub compare: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub embedding: PathBuf,
    /// Components summed into the explained-variance figure.
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    /// Two comma-separated article ids; restricts the projection to their engagers.
    #[arg(long, value_delimiter = ',')]
    pub articles: Option<Vec<String>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct BaselineArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// svm or logistic.
    #[arg(long, default_value = "svm")]
    pub classifier: TextClassifier,
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// SVM box constraint.
    #[arg(long, default_value_t = 10.0)]
    pub c: f64,
    /// RBF kernel width.
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => return fail(&e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}
