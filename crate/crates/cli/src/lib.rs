//! File formats and batch commands around `crossfriend-core`.
//!
//! Each pipeline stage reads and writes plain tab-separated files so stages
//! can be rerun and inspected one at a time:
//! edges -> identity map -> profiles -> instances -> model -> predictions,
//! with `eval` running whole multi-run experiments and `synth` producing
//! test populations.

pub mod commands;
pub mod formats;
pub mod render;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use crossfriend_core::features::FeatureSet;
use crossfriend_core::graph::{IngestConfig, NetworkId};
use crossfriend_core::identity::DEFAULT_THRESHOLD;
use crossfriend_core::prediction::{Measure, TrainConfig};

pub use render::Format;

/// Seed used when neither `--seed` nor `CROSSFRIEND_SEED` is given.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "crossfriend",
    version,
    about = "Cross-network friendship measurement and link prediction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load an edge file, apply the follower filter and write the surviving follow edges.
    Ingest(IngestArgs),
    /// Link accounts across two networks (self-report, exact username, username bigrams).
    Match(MatchArgs),
    /// Compute a maintenance profile for every person linked across the networks.
    Measure(MeasureArgs),
    /// Summarize a profile file: quartiles, histograms, independence test, correlation.
    Stats(StatsArgs),
    /// Draw positive and negative instances for a prediction task.
    Sample(SampleArgs),
    /// Rank instances by one neighborhood measure and score the ranking.
    Rank(RankArgs),
    /// Train a linear classifier on one feature set.
    Train(TrainArgs),
    /// Apply a trained model to instances.
    Predict(PredictArgs),
    /// Run a full multi-run evaluation and write a report.
    Eval(EvalArgs),
    /// Generate a synthetic two-network population with ground truth.
    Synth(SynthArgs),
}

/// Where the graph comes from.
#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge file: `network<TAB>follower<TAB>followee` per line.
    #[arg(long)]
    pub edges: PathBuf,
    /// Account file: `network<TAB>id<TAB>username[<TAB>network:id]`. Accounts
    /// without edges are kept as isolated users.
    #[arg(long)]
    pub accounts: Option<PathBuf>,
    /// Networks to load, comma separated. Defaults to every network named in
    /// the inputs.
    #[arg(long, value_delimiter = ',')]
    pub networks: Vec<NetworkId>,
    /// Drop users with more followers than this in a network; 0 disables.
    #[arg(long, default_value_t = IngestConfig::DEFAULT_MAX_FOLLOWERS)]
    pub max_followers: usize,
}

#[derive(Debug, Args)]
pub struct IdentityArgs {
    /// Identity map: `net:id<TAB>net:id<TAB>method<TAB>score`.
    #[arg(long)]
    pub identity: PathBuf,
}

/// `target=T,source=I`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub target: NetworkId,
    pub source: NetworkId,
}

pub fn parse_task(s: &str) -> Result<Task, String> {
    let (mut target, mut source) = (None, None);
    for part in s.split(',') {
        match part.trim().split_once('=') {
            Some(("target", v)) if !v.is_empty() => target = Some(NetworkId::new(v)),
            Some(("source", v)) if !v.is_empty() => source = Some(NetworkId::new(v)),
            _ => return Err(format!("bad task part `{part}`, expected target=<net>,source=<net>")),
        }
    }
    match (target, source) {
        (Some(t), Some(s)) if t != s => Ok(Task { target: t, source: s }),
        (Some(_), Some(_)) => Err("target and source must differ".to_string()),
        _ => Err("task needs both target= and source=".to_string()),
    }
}

fn parse_feature_set(s: &str) -> Result<FeatureSet, String> {
    s.parse().map_err(|e: crossfriend_core::Error| e.to_string())
}

fn parse_measure(s: &str) -> Result<Measure, String> {
    s.parse().map_err(|e: crossfriend_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Random seed. The environment variable only changes the default.
    #[arg(long, env = "CROSSFRIEND_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    /// Network to predict and network to borrow features from, as `target=T,source=I`.
    #[arg(long, value_parser = parse_task)]
    pub task: Task,
    #[arg(long, default_value_t = 5000)]
    pub positives: usize,
    #[arg(long, default_value_t = 25000)]
    pub negatives: usize,
    /// Minimum negatives sharing a common neighbor in either network.
    #[arg(long, default_value_t = 5000)]
    pub min_cn: usize,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Profile file from `measure`. Computed from the full graph when omitted.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainingArgs {
    /// Regularization strength of the hinge-loss objective.
    #[arg(long, default_value_t = TrainConfig::DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_EPOCHS)]
    pub epochs: usize,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Output edge file (the filtered snapshot). Stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub left: NetworkId,
    #[arg(long)]
    pub right: NetworkId,
    /// Base pairs, `net:id<TAB>net:id` per line. Defaults to the declared
    /// counterparts in the account file.
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Minimum bigram cosine for the username-similarity tier.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Output identity map. Stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub identity: IdentityArgs,
    /// Output profile file. Stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub profiles: PathBuf,
    /// Quantile bins per axis for the independence test.
    #[arg(long, default_value_t = crossfriend_core::experiment::stats::DEFAULT_INDEPENDENCE_BINS)]
    pub bins: usize,
    #[arg(long, value_enum, default_value_t = Format::Kv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub identity: IdentityArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Instance files whose pairs must not be drawn again.
    #[arg(long)]
    pub exclude: Vec<PathBuf>,
    /// Output instance file. Stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also draw a disjoint test sample of the same size into this file.
    #[arg(long)]
    pub test_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub identity: IdentityArgs,
    #[arg(long)]
    pub instances: PathBuf,
    /// Further instance files whose positive pairs are hidden while scoring.
    #[arg(long)]
    pub holdout: Vec<PathBuf>,
    /// Measure such as `JC_I`; defaults to JC on the source network.
    #[arg(long, value_parser = parse_measure)]
    pub measure: Option<Measure>,
    /// Cut-offs to report; defaults to the number of positives.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Output ranking: `rank<TAB>u<TAB>v<TAB>label<TAB>score`. Stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub identity: IdentityArgs,
    #[command(flatten)]
    pub profiles: ProfileArgs,
    #[arg(long)]
    pub instances: PathBuf,
    /// Further instance files whose positive pairs are hidden while extracting
    /// features, normally the test set.
    #[arg(long)]
    pub holdout: Vec<PathBuf>,
    #[arg(long, value_parser = parse_feature_set, default_value = "ALL")]
    pub features: FeatureSet,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Write the extracted training features here.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Output model file. Stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub identity: IdentityArgs,
    #[command(flatten)]
    pub profiles: ProfileArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub instances: PathBuf,
    /// Further instance files whose positive pairs are hidden, normally the
    /// training set.
    #[arg(long)]
    pub holdout: Vec<PathBuf>,
    /// Output predictions: `u<TAB>v<TAB>label<TAB>predicted<TAB>margin`.
    /// Stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvalMode {
    /// Rank by each single measure.
    Unsupervised,
    /// Train one classifier per feature set.
    Supervised,
    /// Supervised, scored only on instances with a profiled common neighbor.
    Subset,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub identity: IdentityArgs,
    #[command(flatten)]
    pub profiles: ProfileArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, value_enum, default_value_t = EvalMode::Supervised)]
    pub mode: EvalMode,
    /// Feature sets, comma separated; all six when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_feature_set)]
    pub configs: Vec<FeatureSet>,
    /// Measures for unsupervised mode; CN, JC and AA on both networks when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_measure)]
    pub measures: Vec<Measure>,
    /// Cut-offs for unsupervised curves; 1000..=10000 step 1000 when omitted.
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Vec<usize>,
    #[arg(long, default_value_t = crossfriend_core::experiment::DEFAULT_RUNS)]
    pub runs: usize,
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value_t = Format::Kv)]
    pub format: Format,
    /// Output report. Stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub users: usize,
    /// Target person-level friendship similarity.
    #[arg(long, default_value_t = 0.2)]
    pub similarity: f64,
    /// Friend-count ratio, sparser over denser network, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub skew: f64,
    /// Share of duplicated circle friendships kept in the denser network's structure.
    #[arg(long, default_value_t = 0.9)]
    pub cross_link: f64,
    /// Mean number of distinct acquaintances per person.
    #[arg(long, default_value_t = 20.0)]
    pub degree: f64,
    /// Sparser and denser network names.
    #[arg(long, value_delimiter = ',', default_values_t = [NetworkId::new("T"), NetworkId::new("I")])]
    pub networks: Vec<NetworkId>,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Directory for edges.tsv, accounts.tsv, identity.tsv and truth.txt.
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Exit status for an error: 2 when the configuration cannot be satisfied,
/// 1 for every other input or validation problem.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let infeasible = err
        .chain()
        .filter_map(|e| e.downcast_ref::<crossfriend_core::Error>())
        .any(crossfriend_core::Error::is_infeasible);
    if infeasible {
        2
    } else {
        1
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    commands::dispatch(cli.command)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_parsing() {
        let t = parse_task("target=T,source=I").unwrap();
        assert_eq!((t.target.as_str(), t.source.as_str()), ("T", "I"));
        assert!(parse_task("target=T").is_err());
        assert!(parse_task("target=T,source=T").is_err());
        assert!(parse_task("tgt=T,source=I").is_err());
    }

    #[test]
    fn infeasible_errors_exit_with_two() {
        let e = anyhow::Error::new(crossfriend_core::Error::Infeasible("x".into())).context("sampling");
        assert_eq!(exit_code(&e), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("missing file")), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
