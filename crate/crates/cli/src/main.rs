mod bundle;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use covert_adsi::regions::RegionId;
use covert_adsi::ErrorKind;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "covert-adsi", version, about = "Covert rate bounds for channels with action-dependent states")]
struct Cli {
    /// Manifest location; defaults to `<out>.manifest.json`, or stderr when
    /// the artifact goes to stdout.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Evaluate one region at fixed parameters.
    RateEval(RateEvalArgs),
    /// Search a region for its best rate.
    Optimize(OptimizeArgs),
    /// Closed-form rewrite-channel capacities over a grid.
    RewriteCurves(CurveArgs),
    /// Gaussian bounds at one instance or over a sweep.
    Gaussian(GaussianArgs),
    /// Build a random code and measure covertness and error exactly/by Monte Carlo.
    Simulate(SimulateArgs),
    /// Write the bundled example channels and parameters.
    Fixtures(FixturesArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RateEvalArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    /// Must match the region named in the parameter file when given.
    #[arg(long)]
    pub region: Option<RegionId>,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub region: RegionId,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long)]
    pub u_size: Option<usize>,
    #[arg(long)]
    pub v_size: Option<usize>,
    /// Let the channel input depend on the action too.
    #[arg(long)]
    pub x_given_a: bool,
    #[arg(long)]
    pub allow_over_cap: bool,
    /// Write the JSON report (with restart trace) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the winning parameters here, in the rate-eval format.
    #[arg(long)]
    pub params_out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveMode {
    /// Sweep ε with noiseless feedback.
    Noiseless,
    /// Fix ε and sweep the feedback crossover δ.
    Noisy,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CurveArgs {
    #[arg(long, value_enum)]
    pub mode: CurveMode,
    /// Single ε (noiseless: one row; noisy: the fixed ε).
    #[arg(long)]
    pub eps: Option<f64>,
    /// `LO:HI:STEP` or a comma list.
    #[arg(long)]
    pub eps_grid: Option<String>,
    /// `LO:HI:STEP` or a comma list.
    #[arg(long)]
    pub delta_grid: Option<String>,
    /// β grid size for the non-causal maximization.
    #[arg(long, default_value_t = covert_adsi::analytic::DEFAULT_BETA_GRID)]
    pub grid: usize,
    /// Restarts for the no-covertness search column.
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepParam {
    #[value(name = "p_x")]
    #[serde(rename = "p_x")]
    Px,
    #[value(name = "p_a")]
    #[serde(rename = "p_a")]
    Pa,
    T,
    SigmaY2,
    SigmaZ2,
    /// Cooperative capacity as a function of the interference scale.
    H,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GaussianArgs {
    #[arg(long)]
    pub p_x: Option<f64>,
    #[arg(long)]
    pub p_a: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub sigma_y2: Option<f64>,
    #[arg(long)]
    pub sigma_z2: Option<f64>,
    #[arg(long, value_enum)]
    pub sweep: Option<SweepParam>,
    #[arg(long, requires = "sweep")]
    pub from: Option<f64>,
    #[arg(long, requires = "sweep")]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    /// JSON simulation config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub bits_m: Option<u32>,
    #[arg(long)]
    pub bits_k: Option<u32>,
    #[arg(long)]
    pub bits_i: Option<u32>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest enumeration (cells) allowed.
    #[arg(long)]
    pub cap: Option<u128>,
    /// Comma list of blocklengths; emits a CSV averaged over `--seeds`.
    #[arg(long)]
    pub n_sweep: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// In a sweep, message bits per symbol (`bits_m = floor(rate * n)`).
    #[arg(long)]
    pub rate_m: Option<f64>,
    /// In a sweep, key bits per symbol.
    #[arg(long)]
    pub rate_k: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FixturesArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest_file: PathBuf,
    /// Redirect the artifact instead of overwriting the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Anything that ends a command early.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] covert_adsi::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) => match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Shape => 3,
                ErrorKind::Capacity => 5,
            },
            CliError::Io { .. } => 4,
            CliError::Usage(_) => 2,
        }
    }
}

/// Successful runs still distinguish feasible from infeasible results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Infeasible,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    match commands::run(cli.command, cli.manifest.as_deref()) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("COVERT_ADSI_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("COVERT_ADSI_THREADS = `{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}
