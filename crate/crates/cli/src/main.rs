//! `lfdr`: estimation, BH control, simulation, exact coverage and the
//! case-study t-test pipeline on the command line.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{CliError, Rendered};

#[derive(Parser, Debug)]
#[command(name = "lfdr", version, about = "Conservative LFDR estimation for small numbers of p-values")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output file; stdout when omitted. A `<out>.manifest.json` sidecar is
    /// written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the result as JSON to this path.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Mle,
    Corrected,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoolingArg {
    Pooled,
    PerReplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CapArg {
    PerDraw,
    FinalMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    ShiftLog,
    None,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// LFDR estimates for every p-value in an `id,p` CSV.
    Lfdr(LfdrArgs),
    /// Benjamini-Hochberg rejections with the median-rejected LFDR.
    Bh(BhArgs),
    /// Chi-squared mixture simulation over a (pi0, N) grid.
    Simulate(SimulateArgs),
    /// Exact coverage of an NFDR estimator for small N.
    CoverageExact(CoverageArgs),
    /// Two-sample t-tests on an abundance matrix, written as `id,p`.
    Ttest(TtestArgs),
    /// Re-runs the command recorded in a manifest and checks the output.
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
pub struct LfdrArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "corrected")]
    pub estimator: EstimatorArg,
    /// Tie weight C; defaults to 1 for corrected and 0.5 for mean.
    #[arg(long)]
    pub weight: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub mc_draws: usize,
    #[arg(long, env = "LFDR_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Report raw estimates in the monotone column too.
    #[arg(long)]
    pub no_monotone: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct BhArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub q: f64,
    #[arg(long, env = "LFDR_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.75, 0.9, 1.0])]
    pub pi0_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 8, 16, 32])]
    pub n_grid: Vec<usize>,
    #[arg(long, default_value_t = 2.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, env = "LFDR_SEED", default_value_t = 20_100_409)]
    pub seed: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [EstimatorArg::Mle, EstimatorArg::Corrected, EstimatorArg::Mean])]
    pub estimators: Vec<EstimatorArg>,
    #[arg(long, default_value_t = 100)]
    pub mc_draws: usize,
    #[arg(long, value_enum, default_value = "pooled")]
    pub pooling: PoolingArg,
    #[arg(long, value_enum, default_value = "per-draw")]
    pub mean_cap: CapArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CoverageArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=5))]
    pub n: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05, 0.1, 0.2, 0.3, 0.5])]
    pub alpha_grid: Vec<f64>,
    /// Discovery probabilities; by default alpha, alpha + 0.05, ... up to 1
    /// for each alpha.
    #[arg(long, value_delimiter = ',')]
    pub pi_grid: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "corrected")]
    pub estimator: EstimatorArg,
    #[arg(long)]
    pub weight: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub mc_draws: usize,
    #[arg(long, env = "LFDR_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct TtestArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "shift-log")]
    pub transform: TransformArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Where to write the regenerated output; defaults to the recorded path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn dispatch(command: Command, argv: &[String]) -> Result<(), CliError> {
    let (name, rendered, output): (&str, Rendered, OutputArgs) = match command {
        Command::Lfdr(a) => ("lfdr", commands::lfdr(&a)?, a.output),
        Command::Bh(a) => ("bh", commands::bh(&a)?, a.output),
        Command::Simulate(a) => ("simulate", commands::simulate(&a)?, a.output),
        Command::CoverageExact(a) => ("coverage-exact", commands::coverage_exact(&a)?, a.output),
        Command::Ttest(a) => ("ttest", commands::ttest(&a)?, a.output),
        Command::Replay(a) => return manifest::replay(&a),
    };
    commands::emit(name, argv, &rendered, &output)
}

pub fn run(argv: Vec<String>) -> Result<(), CliError> {
    let cli = Cli::try_parse_from(&argv).map_err(CliError::Clap)?;
    dispatch(cli.command, &argv)
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            ExitCode::from(if e.use_stderr() { 2 } else { 0 })
        }
        Err(e) => {
            eprintln!("lfdr: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
