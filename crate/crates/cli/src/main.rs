//! `odrpo`: command-line experiments for ordinal advantage estimation.

mod commands;
mod config;
mod error;
mod io;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use odrpo_core::rater::{JudgeNoise, TieBreak};
use odrpo_core::trainer::TrainMode;
use odrpo_core::{Estimator, NormalizationKind, RewardScale, WeightScheme};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "odrpo", version, about = "Ordinal advantage estimation experiments")]
#[command(after_help = "Every subcommand also accepts --config FILE with `key = value` lines; flags override it.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Advantages for reward groups read from CSV.
    #[command(args_override_self = true)]
    Advantage(AdvantageArgs),
    /// Mean absolute curl of the advantage fields over a (K, M) grid.
    #[command(args_override_self = true)]
    CurlScan(CurlScanArgs),
    /// beta/alpha of the binomial reduction against the arcsin gradient.
    #[command(args_override_self = true)]
    Objective(ObjectiveArgs),
    /// Synthetic judge concordance study.
    #[command(args_override_self = true)]
    RaterSim(RaterSimArgs),
    /// Train softmax policies on identity tasks.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Sampled training across vote counts and estimators.
    #[command(args_override_self = true)]
    VoteSweep(VoteSweepArgs),
}

const SUBCOMMANDS: &[&str] = &["advantage", "curl-scan", "objective", "rater-sim", "train", "vote-sweep"];

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Root seed; every random stream is derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel subcommands.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct ScaleArgs {
    /// Integer scale 1..K.
    #[arg(long)]
    pub scale_k: Option<usize>,
    /// Explicit increasing levels, comma separated (overrides --scale-k).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub scale_levels: Option<Vec<f64>>,
}

impl ScaleArgs {
    pub fn build(&self, default_k: usize) -> Result<RewardScale, CliError> {
        let scale = match &self.scale_levels {
            Some(levels) => RewardScale::new(levels.clone())?,
            None => RewardScale::integer(self.scale_k.unwrap_or(default_k))?,
        };
        if let (Some(k), Some(_)) = (self.scale_k, &self.scale_levels) {
            if k != scale.k() {
                return Err(CliError::Input(format!("--scale-k {k} disagrees with {} --scale-levels", scale.k())));
            }
        }
        Ok(scale)
    }
}

#[derive(Args, Debug, Clone)]
pub struct EstimatorArgs {
    /// grpo | maxrl | odrpo, or a full label such as odrpo-mean-gini.
    #[arg(long, default_value = "odrpo")]
    pub estimator: Estimator,
    /// Per-bin normalization for odrpo: std | mean.
    #[arg(long)]
    pub norm: Option<NormalizationKind>,
    /// Bin weights for odrpo: unit | gini | gini-median.
    #[arg(long)]
    pub weights: Option<WeightScheme>,
}

impl EstimatorArgs {
    pub fn resolve(&self) -> Result<Estimator, CliError> {
        match self.estimator {
            Estimator::Odrpo { norm, weights } => Ok(Estimator::Odrpo {
                norm: self.norm.unwrap_or(norm),
                weights: self.weights.unwrap_or(weights),
            }),
            other if self.norm.is_some() || self.weights.is_some() => {
                Err(CliError::Input(format!("--norm/--weights only apply to odrpo, not {other}")))
            }
            other => Ok(other),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct JudgeArgs {
    /// Spread of the judge's score distribution around the true level.
    #[arg(long)]
    pub noise_width: Option<f64>,
    /// Probability a judge call returns a uniform random score.
    #[arg(long)]
    pub outlier_rate: Option<f64>,
}

impl JudgeArgs {
    pub fn build(&self) -> Result<JudgeNoise, CliError> {
        let d = JudgeNoise::default();
        Ok(JudgeNoise::new(self.noise_width.unwrap_or(d.noise_width), self.outlier_rate.unwrap_or(d.outlier_rate))?)
    }
}

#[derive(Args, Debug, Clone)]
pub struct AdvantageArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub scale: ScaleArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Input CSV with header group_id,r_1,...,r_G (stdin when omitted).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Append weighted per-bin contributions bin_1..bin_K.
    #[arg(long)]
    pub per_bin: bool,
    /// Also write per-group bin means and weights here.
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct CurlScanArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    #[arg(long, default_value_t = 5)]
    pub k_max: usize,
    #[arg(long, default_value_t = 2)]
    pub m_min: usize,
    #[arg(long, default_value_t = 6)]
    pub m_max: usize,
    /// Estimator labels to scan (default: grpo, maxrl and every odrpo variant).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub estimators: Option<Vec<Estimator>>,
}

#[derive(Args, Debug, Clone)]
pub struct ObjectiveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Group size M.
    #[arg(long, default_value_t = 512)]
    pub group_size: usize,
    /// Number of evenly spaced P values in [0, 1].
    #[arg(long, default_value_t = 21)]
    pub points: usize,
    #[arg(long, default_value = "std")]
    pub norm: NormalizationKind,
}

#[derive(Args, Debug, Clone)]
pub struct RaterSimArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub scale: ScaleArgs,
    #[command(flatten)]
    pub judge: JudgeArgs,
    #[arg(long, default_value_t = 1000)]
    pub datapoints: usize,
    /// Responses per datapoint (M).
    #[arg(long, default_value_t = 8)]
    pub responses: usize,
    /// Judge calls per response (N).
    #[arg(long, default_value_t = 16)]
    pub calls: usize,
    /// Half-width of the latent quality band of one datapoint.
    #[arg(long, default_value_t = 3.0)]
    pub quality_spread: f64,
    /// Kendall's W at or above which a datapoint counts as consistent.
    #[arg(long, default_value_t = 0.9)]
    pub threshold: f64,
    /// Per-response statistics CSV.
    #[arg(long)]
    pub responses_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct TrainingArgs {
    #[arg(long, default_value_t = 8)]
    pub group_size: usize,
    /// Learning rate (default depends on the mode).
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    /// Tasks per step.
    #[arg(long, default_value_t = 1)]
    pub batch_size: usize,
    #[arg(long)]
    pub batch_norm: bool,
    /// Number of identity tasks.
    #[arg(long, default_value_t = 1)]
    pub tasks: usize,
    /// smallest | largest | median
    #[arg(long, default_value = "smallest")]
    pub tie_break: TieBreak,
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub scale: ScaleArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[command(flatten)]
    pub judge_noise: JudgeArgs,
    /// exact | sampled
    #[arg(long, default_value = "exact")]
    pub mode: TrainMode,
    /// Judge calls per rollout (sampled mode).
    #[arg(long, default_value_t = 1)]
    pub votes: usize,
    /// Score rollouts with the noisy judge (sampled mode).
    #[arg(long)]
    pub judge: bool,
}

#[derive(Args, Debug, Clone)]
pub struct VoteSweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub scale: ScaleArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[command(flatten)]
    pub judge_noise: JudgeArgs,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "1,8,16,32")]
    pub votes: Vec<usize>,
    #[arg(
        long,
        value_delimiter = ',',
        num_args = 1..,
        default_value = "grpo,maxrl,odrpo-std-unit,odrpo-std-gini,odrpo-std-gini-median"
    )]
    pub estimators: Vec<Estimator>,
    /// Score with the exact level instead of the noisy judge.
    #[arg(long)]
    pub deterministic_judge: bool,
}

fn run(argv: Vec<OsString>) -> Result<(), CliError> {
    let argv = config::merge_config(argv, SUBCOMMANDS)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Err(CliError::Input("invalid arguments".into())) } else { Ok(()) };
        }
    };
    commands::dispatch(cli.command)
}

fn main() -> ExitCode {
    debug_assert!(SUBCOMMANDS.iter().all(|s| Cli::command().find_subcommand(s).is_some()));
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("odrpo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
