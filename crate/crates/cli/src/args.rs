use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "drivegym", version, about = "Simulate, benchmark and plot electric drive control episodes")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one closed-loop episode and write its trajectory as CSV.
    Run(RunArgs),
    /// Run seeded episodes and report MAE per step statistics.
    Bench(BenchArgs),
    /// Write the reference trajectory of a seeded reset, or the resolved configuration.
    Export(ExportArgs),
    /// Plot a trajectory CSV as SVG.
    Plot(PlotArgs),
}

/// Selects the environment: a configuration file, or defaults for an id.
#[derive(Debug, Clone, Args)]
pub struct EnvArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Environment id `<motor>-<cont|disc>-v0`, used when no config is given.
    #[arg(long)]
    pub id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControllerKind {
    Pi,
    Hysteresis,
    /// Replays actions from a JSON file (`--actions`).
    External,
}

#[derive(Debug, Clone, Args)]
pub struct ControllerArgs {
    #[arg(long, value_enum, default_value_t = ControllerKind::Pi)]
    pub controller: ControllerKind,

    /// Hysteresis half-band in normalized units.
    #[arg(long, default_value_t = 0.05)]
    pub band: f64,

    /// JSON array of actions for the external controller.
    #[arg(long)]
    pub actions: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub controller: ControllerArgs,

    /// Episode seed; defaults to the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Reference CSV (as written by `export`) to track instead of a generated one.
    #[arg(long)]
    pub reference: Option<PathBuf>,

    /// Trajectory CSV output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub controller: ControllerArgs,

    #[arg(long, default_value_t = 100)]
    pub episodes: usize,

    /// Benchmark seed; defaults to the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Report JSON output; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Directory for one trajectory CSV per episode.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportKind {
    Reference,
    Config,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub env: EnvArgs,

    #[arg(long, value_enum, default_value_t = ExportKind::Reference)]
    pub what: ExportKind,

    /// Reset seed for the reference; defaults to the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Configuration the trajectory was recorded with (for the safety margin).
    #[command(flatten)]
    pub env: EnvArgs,

    /// Trajectory CSV written by `run` or `bench --records`.
    #[arg(long)]
    pub input: PathBuf,

    /// Comma-separated entries to plot; defaults to the tracked entries.
    #[arg(long, value_delimiter = ',')]
    pub entries: Vec<String>,

    /// SVG output.
    #[arg(long)]
    pub out: PathBuf,
}
