use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use longmem::mc::{EstimatorConfig, PrefilterMode, Tail};
use longmem::rra::{GridParams, DEFAULT_KNOT};

#[derive(Debug, Parser)]
#[command(
    name = "longmem",
    version,
    about = "Rescaled range tests for long-range dependence in returns"
)]
pub struct Cli {
    /// Report format for JSON-producing commands.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Monte Carlo worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, default_value_t = 0, global = true)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full pipeline: describe, prefilter, RRA and Monte Carlo tests.
    Analyze(AnalyzeArgs),
    /// Re-run the analysis recorded in a previous report.
    Replay {
        report: PathBuf,
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Simulate an ARFIMA(p, d, 0) series and write it as CSV.
    Simulate(SimulateArgs),
    /// Rescaled range analysis of a series.
    Rra {
        input: PathBuf,
        #[command(flatten)]
        estimator: EstimatorArgs,
        #[arg(long, value_parser = parse_prefilter, default_value = "none")]
        prefilter: PrefilterMode,
    },
    /// Correlogram, PACF lag selection and sparse AR fit.
    Prefilter {
        input: PathBuf,
        /// Fit these lags instead of the PACF-selected ones, e.g. `1,4`.
        #[arg(long, value_delimiter = ',')]
        lags: Option<Vec<usize>>,
        /// Also write the residual series as CSV.
        #[arg(long)]
        residuals: Option<PathBuf>,
    },
    /// Null distribution of H, H_S and H_L for Gaussian white noise.
    CriticalValues(CriticalValuesArgs),
    /// Rejection rates of the RRA test against ARFIMA(0, H - 0.5, 0).
    Power(PowerArgs),
    /// Mean estimates with and without prefiltering over an ARFIMA grid.
    BiasStudy(BiasStudyArgs),
    /// Descriptive statistics at daily, weekly, monthly and quarterly scales.
    Describe {
        input: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Randomly permute a return series and write it as CSV.
    Shuffle {
        input: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct SeedArg {
    /// Master seed.
    #[arg(long, env = "LONGMEM_SEED", default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct EstimatorArgs {
    /// Split point of the short/long scale fit.
    #[arg(long, default_value_t = DEFAULT_KNOT)]
    pub knot: usize,
    /// Smallest log-scale of the grid.
    #[arg(long, default_value_t = 1.6)]
    pub grid_min: f64,
    /// Largest log-scale of the grid.
    #[arg(long, default_value_t = 5.7)]
    pub grid_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub grid_step: f64,
}

impl EstimatorArgs {
    pub fn config(&self) -> EstimatorConfig {
        EstimatorConfig {
            grid: GridParams {
                ln_min: self.grid_min,
                ln_max: self.grid_max,
                step: self.grid_step,
            },
            knot: self.knot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TailArg {
    Upper,
    TwoSided,
}

impl From<TailArg> for Tail {
    fn from(t: TailArg) -> Self {
        match t {
            TailArg::Upper => Tail::Upper,
            TailArg::TwoSided => Tail::TwoSided,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// CSV with a `value`, `date,value` or `date,price` header; `-` for stdin.
    pub input: PathBuf,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Null replications per critical-value panel.
    #[arg(long, default_value_t = 5000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = TailArg::TwoSided)]
    pub tail: TailArg,
    /// `pacf` (default), `ar1`, `none` or an explicit lag list such as `1,4`.
    #[arg(long, value_parser = parse_prefilter, default_value = "pacf")]
    pub prefilter: PrefilterMode,
    /// Directory caching critical-value panels.
    #[arg(long)]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Fractional differencing parameter.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub d: f64,
    /// AR coefficients as `lag:coef` pairs, e.g. `1:0.2,4:0.0782`.
    #[arg(long, value_delimiter = ',', value_parser = parse_ar_term, allow_negative_numbers = true)]
    pub ar: Vec<(usize, f64)>,
    #[arg(long = "T")]
    pub length: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sd: f64,
    /// Discarded warm-up observations (default: the MA truncation order).
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct CriticalValuesArgs {
    #[arg(long = "T")]
    pub length: usize,
    #[arg(long, default_value_t = 5000)]
    pub reps: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Filter applied to each null series before estimation.
    #[arg(long, value_parser = parse_prefilter, default_value = "none")]
    pub prefilter: PrefilterMode,
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Write per-replicate estimates as CSV.
    #[arg(long)]
    pub dump_replicates: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    /// True Hurst exponents, comma separated.
    #[arg(long = "H", value_delimiter = ',', required = true)]
    pub h: Vec<f64>,
    /// Series lengths, comma separated.
    #[arg(long = "T", value_delimiter = ',', required = true)]
    pub lengths: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = TailArg::Upper)]
    pub tail: TailArg,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// d in {0, .04, .08, .12} x AR(1) rho in {0, .1, .2}, AR(1) filter.
    Ar1Grid,
    /// d in {0, .12} with a lag-4 AR term 0.0782, lag-4 filter.
    Lag4,
}

#[derive(Debug, Args)]
pub struct BiasStudyArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
    #[arg(long = "T", default_value_t = 1000)]
    pub length: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

pub fn parse_prefilter(s: &str) -> Result<PrefilterMode, String> {
    match s {
        "none" => Ok(PrefilterMode::None),
        "ar1" => Ok(PrefilterMode::Ar1),
        "pacf" => Ok(PrefilterMode::PacfSparse),
        _ => {
            let lags = s
                .strip_prefix("lags:")
                .unwrap_or(s)
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| {
                    format!("expected none, ar1, pacf or a lag list like 1,4; got `{s}`")
                })?;
            Ok(PrefilterMode::FixedLags(lags))
        }
    }
}

fn parse_ar_term(s: &str) -> Result<(usize, f64), String> {
    let (lag, coef) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lag:coefficient, got `{s}`"))?;
    let lag = lag
        .trim()
        .parse()
        .map_err(|_| format!("bad AR lag `{lag}`"))?;
    let coef = coef
        .trim()
        .parse()
        .map_err(|_| format!("bad AR coefficient `{coef}`"))?;
    Ok((lag, coef))
}
