use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use phasefit_core::dataio::Curve;
use phasefit_core::fit::{FitMethod, Target};
use phasefit_core::phd::StructureKind;

#[derive(Debug, Parser)]
#[command(name = "phasefit", version, about = "Phase-type lifetime models: evaluate, sample, fit and test")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate pdf, survival, hazard and cumulative hazard of a model.
    Eval(EvalArgs),
    /// Fit a classical phase-type model by EM.
    Fit(FitArgs),
    /// Fit a one cut-point model with Erlang zones, or scan candidate cuts.
    FitOcp(FitOcpArgs),
    /// Fit every structure and state count in a range.
    Sweep(SweepArgs),
    /// Draw a sample from a model.
    Sample(SampleArgs),
    /// Anderson-Darling test of a fitted model against data.
    Gof(GofArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Destination file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A model given by parameters, or read from a model or report document.
#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model document, or report document (first entry).
    #[arg(long, conflicts_with = "structure")]
    pub model: Option<PathBuf>,
    #[arg(long, required_unless_present = "model")]
    pub structure: Option<StructureKind>,
    #[arg(long)]
    pub states: Option<usize>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rates: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub branch: Option<Vec<f64>>,
    /// Hyper-Erlang branch shapes.
    #[arg(long, value_delimiter = ',')]
    pub shapes: Option<Vec<usize>>,
    /// Sub-generator rows separated by ';', entries by ','.
    #[arg(long, allow_hyphen_values = true)]
    pub subgen: Option<String>,
    /// Cut point; makes a two-zone model from the `*2` parameters.
    #[arg(long)]
    pub cut: Option<f64>,
    #[arg(long)]
    pub rate2: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub rates2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub branch2: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub subgen2: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Right end of the grid; five model means when absent.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = 512)]
    pub points: usize,
    #[arg(long, value_delimiter = ',', default_value = "pdf,survival,hazard,cum_hazard")]
    pub curves: Vec<Curve>,
    #[command(flatten)]
    pub output: Output,
}

/// EM settings shared by the fitting commands.
#[derive(Debug, Args)]
pub struct EmArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
}

#[derive(Debug, Args)]
pub struct PValueArgs {
    /// `asymptotic` or `bootstrap`.
    #[arg(long, default_value = "asymptotic")]
    pub pvalue: String,
    #[arg(long, default_value_t = 99)]
    pub replicates: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Data file: a header line, then one positive value per line.
    #[arg(long, required_unless_present = "target")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "point")]
    pub method: FitMethod,
    #[arg(long)]
    pub structure: StructureKind,
    #[arg(long, default_value_t = 2)]
    pub states: usize,
    /// Group method: bin edges from 0; the last may be `inf`.
    #[arg(long, value_delimiter = ',')]
    pub edges: Option<Vec<f64>>,
    /// Group method: equal-width bins over `[0, max]`; Sturges' count when absent.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Density method: `exponential:RATE`, `erlang:K,RATE`, `gamma:SHAPE,RATE`,
    /// `weibull:SHAPE,SCALE` or `lognormal:MU,SIGMA`.
    #[arg(long)]
    pub target: Option<Target>,
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    #[arg(long)]
    pub target_horizon: Option<f64>,
    #[command(flatten)]
    pub em: EmArgs,
    #[command(flatten)]
    pub pvalue: PValueArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct FitOcpArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub states: usize,
    /// Cut point; the data mean rounded to two decimals when absent.
    #[arg(long, conflicts_with = "scan")]
    pub cut: Option<f64>,
    /// Also fit the classical Erlang model of the same order.
    #[arg(long)]
    pub compare: bool,
    /// Tabulate fits over candidate cuts instead (deciles unless `--cuts`).
    #[arg(long)]
    pub scan: bool,
    #[arg(long, value_delimiter = ',', requires = "scan")]
    pub cuts: Option<Vec<f64>>,
    #[command(flatten)]
    pub em: EmArgs,
    #[command(flatten)]
    pub pvalue: PValueArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "general")]
    pub structures: Vec<StructureKind>,
    /// `M`, `LO..HI` or `LO-HI`.
    #[arg(long, default_value = "1..4")]
    pub states: String,
    #[command(flatten)]
    pub em: EmArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "sample")]
    pub header: String,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct GofArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Model or report document.
    #[arg(long)]
    pub model: PathBuf,
    /// Report entry to test.
    #[arg(long, default_value_t = 0)]
    pub entry: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub pvalue: PValueArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = phasefit_server::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: std::net::IpAddr,
    #[arg(long, default_value_t = 64)]
    pub capacity: usize,
    #[arg(long, default_value_t = 8 * 1024 * 1024)]
    pub max_upload: usize,
    #[arg(long)]
    pub cors_origin: Option<String>,
}
