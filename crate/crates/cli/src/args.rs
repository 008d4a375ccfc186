use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Energy-aware task offloading for IRS-assisted multi-UAV edge computing.
#[derive(Debug, Parser)]
#[command(name = "iopo", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the online learner and write per-frame records.
    Train(TrainArgs),
    /// Score a frozen checkpoint against baselines over a trailing window.
    Eval(EvalArgs),
    /// Exhaustive search over every offloading decision.
    Oracle(OracleArgs),
    /// Merge runs into plot-ready series.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat TOML config; relative paths are also looked up in $IOPO_CONFIG_DIR.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub frames: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also save a checkpoint every this many frames (0: final only).
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: u64,
    /// Use the argmax decision instead of the quantizer's candidates.
    #[arg(long)]
    pub disable_oppo: bool,
    /// Start each frame's reference from the prediction instead of Greedy OC.
    #[arg(long)]
    pub disable_initial_reference: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Defaults to the config.toml saved beside the checkpoint.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub frames: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub window: usize,
    /// Comma-separated baseline names, or "all".
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub baselines: Vec<String>,
    #[arg(long)]
    pub oracle: bool,
    /// Defaults to the checkpoint's directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// summary.json files written by `train`; each is read with its sibling frames.csv.
    pub inputs: Vec<PathBuf>,
    /// Width of the moving average in frames.
    #[arg(long, default_value_t = 1000)]
    pub window: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub no_svg: bool,
}
