use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "spectral-spike",
    version,
    about = "Spike detection and spectral density estimation for sample covariance matrices"
)]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "SPECTRAL_SPIKE_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw Y from a spiked covariance model and write it to a file.
    Simulate(SimulateArgs),
    /// Count spikes in a data matrix.
    Detect(DetectArgs),
    /// Estimate the spectral density on a grid.
    Asd(AsdArgs),
    /// Compare both pole finders on the same extensions.
    Poles(PolesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Raw,
    #[value(name = "1/m")]
    OneOverM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Gaussian,
    Rademacher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Cc,
    Finite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StopArg {
    Fixed,
    Tail,
    TwoWindow,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    /// Bulk variance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Spiked population eigenvalues, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub spikes: Vec<f64>,
    #[arg(long, value_enum, default_value_t = DistArg::Gaussian)]
    pub dist: DistArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to csv for a `.csv` path, binary otherwise.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

/// Input, probe and stopping-rule flags shared by the analysis commands.
#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to csv for a `.csv` path, binary otherwise.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long, value_enum, default_value_t = ScaleArg::OneOverM)]
    pub scale: ScaleArg,
    /// Number of probe vectors.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long, value_enum)]
    pub stop: Option<StopArg>,
    /// Window length for the stopping rule and the averaging step.
    #[arg(long)]
    pub q: Option<usize>,
    /// Tolerance for the tail and two-window rules.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value_t = BackendArg::Cc)]
    pub backend: BackendArg,
    /// Truncation size for the finite-section backend.
    #[arg(long)]
    pub section_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Threshold constant.
    #[arg(long, default_value_t = 1.0)]
    pub c_thresh: f64,
    /// Threshold exponent.
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    /// Repeat over probe seeds seed..seed+trials-1 and tabulate r̂.
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AsdArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Grid points for the density CSV.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// Destination of the `lambda,density` CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PolesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
}
