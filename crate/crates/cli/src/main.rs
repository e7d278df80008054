mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use cascade_gnn::data::Scope;
use cascade_gnn::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Fake-news detection on propagation graphs: synthetic data, training and
/// the evaluation protocols.
#[derive(Debug, Parser)]
#[command(name = "cascade-gnn", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Dataset directory (users.jsonl, follows.csv, cascades.jsonl, urls.jsonl).
    #[arg(long, global = true, default_value = "data")]
    pub data: PathBuf,
    /// Directory for reports.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// JSON config with optional `seed`, `generator`, `harness`, `aging` and
    /// `layout` sections. Flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for everything; falls back to the config file, then
    /// CASCADE_GNN_SEED, then 42.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Parallel workers for folds, sweep points and generation
    /// (default: all cores, 1 = sequential).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    Url,
    Cascade,
}

impl From<ScopeArg> for Scope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::Url => Scope::UrlWise,
            ScopeArg::Cascade => Scope::CascadeWise,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Experiment {
    /// Classify whole URLs or single cascades.
    #[arg(long, value_enum)]
    pub scope: Option<ScopeArg>,
    /// Drop cascades with fewer tweets (cascade scope only; default 6).
    #[arg(long)]
    pub min_cascade_size: Option<usize>,
    /// Diffusion window in hours (default 24). `sweep` also takes a range
    /// `a..b` (inclusive, 1 h steps) or a comma list.
    #[arg(long)]
    pub hours: Option<String>,
    /// Training iterations per model.
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset into --data.
    Generate {
        #[arg(long)]
        urls: Option<usize>,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        mean_cascades: Option<f64>,
        /// Plain-text word vectors for embeddings instead of random unit vectors.
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Summary statistics of the dataset.
    Stats,
    /// Train one model on the first fold split and save model.json.
    Train(Experiment),
    /// Grouped 5-fold cross-validation: report.json and roc.csv.
    Cv(Experiment),
    /// Cross-validation per diffusion window: auc_vs_hours.csv.
    Sweep(Experiment),
    /// Train on the past, test on later time windows: aging.csv.
    Aging(Experiment),
    /// Backward feature-group selection: ablation.csv.
    Ablate(Experiment),
    /// Mean node embedding per user with credibility: embeddings.csv.
    ExportEmbeddings {
        #[command(flatten)]
        experiment: Experiment,
        /// Checkpoint from `train`; trains a fresh model if absent.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Force-directed layout of the follow graph: layout.csv.
    Layout {
        #[arg(long)]
        layout_iterations: Option<usize>,
        /// Lay out a random subset of this many users (0 = all).
        #[arg(long)]
        max_nodes: Option<usize>,
    },
    /// Follow-graph distances between samples (MAD/MMD): overlap.json.
    Overlap(Experiment),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::Json(_)
        | Error::EmptyCascade(_)
        | Error::CascadeOrder { .. }
        | Error::UnknownUser(_)
        | Error::InvalidSocialGraph(_) => 2,
        e if e.is_numeric() => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(commands::Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
