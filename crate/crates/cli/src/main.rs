use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pivalue::Error;

mod commands;

/// Exit status for a clap usage error.
const EXIT_USAGE: u8 = 64;
/// Domain, configuration, parse and I/O failures.
const EXIT_DOMAIN: u8 = 2;
/// Non-convergence, or a boundary fit without `--allow-boundary`.
const EXIT_FLAGGED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "pivalue", version, about = "GLM p-values, π-values, decision thresholds and replication")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Person-years per rate unit.
    #[arg(long, global = true)]
    pub exposure_scale: Option<f64>,
    /// Coefficient prior, once per coefficient: `flat` or a JSON object
    /// such as `{"kind":"test_invchisq","beta0_prior":0,"nu0":2.5,"s":1}`.
    #[arg(long, global = true)]
    pub prior: Vec<String>,
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    #[arg(long, global = true)]
    pub n_sim: Option<usize>,
    #[arg(long, global = true)]
    pub allow_boundary: bool,
    /// Result path; a `.csv` extension writes the plot table there instead.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Plot-data CSV path.
    #[arg(long, global = true)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    /// Trial CSV; the bundled SGLT2i data when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub study: Option<String>,
    #[arg(long)]
    pub outcome: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Laplace,
    Grid,
    Metropolis,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum UtilityArg {
    Linear,
    Log,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Poisson fits, Wald p-values and relative risks.
    Fit {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Posterior and π-values.
    Posterior {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Grid bounds `lo,hi`, once per coefficient.
        #[arg(long, allow_hyphen_values = true)]
        bounds: Vec<String>,
    },
    /// Log-likelihood grid and quadraticity score.
    Surface {
        #[command(flatten)]
        data: DataArgs,
        /// Half-width in standard errors.
        #[arg(long, default_value_t = 4.0)]
        half_width: f64,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
    },
    /// Client threshold, action and analyst EVPI.
    Decide {
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        epsilon_loss: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        pi: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        analyst_capital: Option<f64>,
        #[arg(long, value_enum)]
        utility: Option<UtilityArg>,
    },
    /// π-value a replicate would see.
    PredictPi {
        #[arg(long)]
        pi: f64,
    },
    /// Replication probability density of −log10 p.
    Rpd {
        #[arg(long)]
        pi_init: f64,
        #[arg(long, default_value_t = 3001)]
        points: usize,
        #[arg(long, default_value_t = pivalue::replication::RPD_CAP)]
        cap: f64,
    },
    /// Monte Carlo replication of a fitted study.
    Replicate {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Prior density grids and local uniformity.
    Priors {
        #[arg(long, default_value_t = -50.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 50.0)]
        hi: f64,
    },
    /// Normal and Student-t tails of a z statistic.
    Tails {
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
        /// Residual degrees of freedom n − p.
        #[arg(long)]
        dof: u64,
    },
}

/// A command failure, or a result that was written but must not exit 0.
pub enum Failure {
    Lib(Error),
    Flagged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotConverged(_) => EXIT_FLAGGED,
        _ => EXIT_DOMAIN,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Flagged(msg)) => {
            eprintln!("flagged: {msg}");
            ExitCode::from(EXIT_FLAGGED)
        }
    }
}
