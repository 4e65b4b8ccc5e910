use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "hlik", version, about = "h-likelihood audits, fits, predictions and Monte Carlo studies")]
pub struct Cli {
    /// Worker threads (falls back to HLIK_JOBS, then to the number of CPUs).
    #[arg(long, global = true, env = "HLIK_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the Bartlett-identity conditions of a model over a θ grid.
    Audit(AuditArgs),
    /// Jointly maximise h over (θ, v).
    Fit(FitArgs),
    /// Predictive densities and highest-density intervals for a future value.
    Predict(PredictArgs),
    /// Coverage of prediction sets by simulation.
    Coverage(CoverageArgs),
    /// Remainder-term study of the score expansion.
    Rterm(MomentArgs),
    /// Posterior-side and sampling-side variance decompositions.
    Duality(DualityArgs),
    /// Predictive-law distances against n on both parameter scales.
    Scales(ScalesArgs),
    /// Run the full case study and report each check against its reference value.
    ReproducePaper(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Lambda,
    LogLambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    FlatLambda,
    FlatLogLambda,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long, value_enum, default_value = "lambda")]
    pub param_scale: ScaleArg,
    /// default, default:N, log:LO:HI:N, lin:LO:HI:N or a comma list of values.
    #[arg(long, default_value = "default")]
    pub theta_grid: String,
    /// Also estimate the full identities (A, B, C blocks) by Monte Carlo.
    #[arg(long)]
    pub full: bool,
    #[arg(long, default_value_t = 5)]
    pub n_obs: usize,
    #[arg(long, default_value_t = 100_000)]
    pub n_mc: usize,
    /// Required with --full.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Search the transform catalog for a Bartlizing scale of v.
    #[arg(long)]
    pub bartlize: bool,
    /// Comma list from identity, log, logit.
    #[arg(long, value_delimiter = ',', default_value = "identity,log,logit")]
    pub transforms: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "lambda")]
    pub param_scale: ScaleArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "log-lambda")]
    pub param_scale: ScaleArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2001)]
    pub grid_nodes: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the density grid as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    /// TOML file with experiment keys; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub theta: Option<Vec<f64>>,
    /// Sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Comma list from hessian-normal, aphl, pivotal, posterior-flat.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long, value_enum)]
    pub param_scale: Option<ScaleArg>,
    #[arg(long)]
    pub grid_nodes: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DualityArgs {
    #[command(flatten)]
    pub moments: MomentArgs,
    #[arg(long, value_enum, default_value = "flat-log-lambda")]
    pub prior: PriorArg,
}

#[derive(Debug, Args)]
pub struct ScalesArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub grid_nodes: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the check table to stderr.
    #[arg(long)]
    pub table: bool,
}
