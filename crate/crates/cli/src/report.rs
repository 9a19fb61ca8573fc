//! The `analyze` pipeline and the report it produces.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use longmem::io::{read_series, SeriesInput};
use longmem::mc::{
    derive_seed, test_all, Estimates, EstimatorConfig, McConfig, NullPanel, PrefilterMode, Tail,
    TestVerdict, Variant,
};
use longmem::prefilter::{correlogram, fit_sparse_ar, select_lags, SparseArFit, MAX_LAG};
use longmem::rra::{build_scale_grid, estimate_hurst_split, RraResult};
use longmem::series::{
    aggregate, describe, shuffle_surrogate, AggregationMode, AggregationPlan, DescriptiveStats,
    ReturnSeries, ScaleLabel,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, StageExt};
use crate::store::{fetch_panel, CriticalValuesStore, StoreKey};

/// Seed stream for shuffled surrogates, disjoint from the Monte Carlo streams.
const SHUFFLE_STREAM: u64 = 16;

pub fn shuffle_seed(master: u64) -> u64 {
    derive_seed(master, SHUFFLE_STREAM, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: "longmem".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputMeta {
    pub path: PathBuf,
    pub sha256: String,
    /// `prices` or `returns`.
    pub kind: String,
    pub n_returns: usize,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
}

/// Reads a CSV series from `path` (`-` for stdin) and converts prices to log returns.
pub fn load_returns(path: &Path) -> Result<(ReturnSeries, InputMeta), CliError> {
    let bytes = if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::Read::read_to_end(&mut std::io::stdin(), &mut buf)
            .map_err(|e| CliError::io("<stdin>", e))?;
        buf
    } else {
        std::fs::read(path).map_err(|e| CliError::io(path.display(), e))?
    };
    let parsed = read_series(bytes.as_slice()).map_err(|e| match e {
        longmem::Error::Parse { line, message } => CliError::Core(longmem::Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        }),
        other => CliError::Stage {
            stage: "read",
            source: other,
        },
    })?;
    let kind = match parsed {
        SeriesInput::Prices(_) => "prices",
        SeriesInput::Returns(_) => "returns",
    };
    let returns = parsed.into_returns();
    let meta = InputMeta {
        path: path.to_path_buf(),
        sha256: Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect(),
        kind: kind.into(),
        n_returns: returns.len(),
        first_date: returns.first_date(),
        last_date: returns.last_date(),
    };
    Ok((returns, meta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleStats {
    pub scale: String,
    pub aggregation: AggregationMode,
    pub observations: usize,
    pub raw: DescriptiveStats,
    pub shuffled: DescriptiveStats,
}

/// Statistics of the series and of one shuffled surrogate at the four
/// reporting scales (calendar blocks when dated, trading-day blocks otherwise).
pub fn describe_scales(r: &ReturnSeries, seed: u64) -> Result<Vec<ScaleStats>, CliError> {
    let surrogate = shuffle_surrogate(r, seed);
    [
        ScaleLabel::Daily,
        ScaleLabel::Weekly,
        ScaleLabel::Monthly,
        ScaleLabel::Quarterly,
    ]
    .into_iter()
    .map(|scale| {
        let mode = AggregationMode::for_scale(scale, r.dates().is_some())
            .expect("named scales always have a mode");
        let plan = AggregationPlan::build(mode, r).stage("describe")?;
        let raw = aggregate(r, &plan)
            .and_then(|a| describe(&a))
            .stage("describe")?;
        let shuffled = aggregate(&surrogate, &plan)
            .and_then(|a| describe(&a))
            .stage("describe (shuffled)")?;
        Ok(ScaleStats {
            scale: scale.to_string(),
            aggregation: mode,
            observations: plan.len(),
            raw,
            shuffled,
        })
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefilterSummary {
    pub mode: PrefilterMode,
    /// PACF at lags 1..=10 when lags were selected from the correlogram.
    pub pacf: Option<Vec<f64>>,
    pub threshold: Option<f64>,
    pub selected_lags: Vec<usize>,
    pub coefficients: BTreeMap<usize, f64>,
    pub intercept: f64,
    pub residual_length: usize,
}

/// Runs the filter named by `mode`, returning the fit and its summary.
pub fn run_prefilter(
    z: &[f64],
    mode: &PrefilterMode,
) -> longmem::Result<(SparseArFit, PrefilterSummary)> {
    let (fit, corr) = match mode {
        PrefilterMode::None => (fit_sparse_ar(z, &[])?, None),
        PrefilterMode::Ar1 => (fit_sparse_ar(z, &[1])?, None),
        PrefilterMode::FixedLags(lags) => (fit_sparse_ar(z, lags)?, None),
        PrefilterMode::PacfSparse => {
            let c = correlogram(z, MAX_LAG)?;
            (fit_sparse_ar(z, &select_lags(&c))?, Some(c))
        }
    };
    let summary = PrefilterSummary {
        mode: mode.clone(),
        threshold: corr.as_ref().map(|c| c.threshold),
        pacf: corr.map(|c| c.pacf),
        selected_lags: fit.selected_lags.clone(),
        coefficients: fit.coefficients.clone(),
        intercept: fit.intercept,
        residual_length: fit.residuals.len(),
    };
    Ok((fit, summary))
}

/// Everything needed to re-run an analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOptions {
    pub input: PathBuf,
    pub seed: u64,
    pub replications: usize,
    pub alpha: f64,
    pub tail: Tail,
    pub prefilter: PrefilterMode,
    pub estimator: EstimatorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValuesRef {
    /// Store key of the panel.
    pub key: String,
    pub panel: NullPanel,
}

/// Estimates and verdicts for one version of the series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub n_obs: usize,
    pub rra: RraResult,
    pub critical_values: CriticalValuesRef,
    pub tests: BTreeMap<Variant, TestVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: ToolInfo,
    pub options: AnalyzeOptions,
    pub input: InputMeta,
    pub shuffle_seed: u64,
    pub describe: Vec<ScaleStats>,
    pub prefilter: PrefilterSummary,
    pub unfiltered: ArmReport,
    pub filtered: ArmReport,
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if [0.01, 0.05, 0.10].iter().any(|a| (a - alpha).abs() < 1e-12) {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "alpha must be one of 0.10, 0.05, 0.01, got {alpha}"
        )))
    }
}

pub fn analyze(
    opts: &AnalyzeOptions,
    store: Option<&CriticalValuesStore>,
) -> Result<AnalysisReport, CliError> {
    check_alpha(opts.alpha)?;
    let grid = build_scale_grid(&opts.estimator.grid).stage("scale grid")?;
    let (returns, input) = load_returns(&opts.input)?;
    let shuffle_seed = shuffle_seed(opts.seed);
    let describe = describe_scales(&returns, shuffle_seed)?;

    let z = returns.values();
    let raw = estimate_hurst_split(z, &grid, opts.estimator.knot).stage("rra (unfiltered)")?;
    let (fit, prefilter) = run_prefilter(z, &opts.prefilter).stage("prefilter")?;
    let filtered =
        estimate_hurst_split(&fit.residuals, &grid, opts.estimator.knot).stage("rra (filtered)")?;

    // Critical values are length-matched; both arms share a panel when no lag is removed.
    let mut panels: BTreeMap<usize, NullPanel> = BTreeMap::new();
    let mut arm = |rra: RraResult, n: usize, stage: &'static str| -> Result<ArmReport, CliError> {
        let cfg = McConfig {
            estimator: opts.estimator,
            ..McConfig::new(n, opts.replications, opts.seed)
        };
        let panel = match panels.get(&n) {
            Some(p) => p.clone(),
            None => {
                let p = fetch_panel(store, &cfg)?;
                panels.insert(n, p.clone());
                p
            }
        };
        let estimates = Estimates::try_from(&rra).stage(stage)?;
        let tests = test_all(&estimates, n, &panel, opts.alpha, opts.tail).stage(stage)?;
        Ok(ArmReport {
            n_obs: n,
            rra,
            critical_values: CriticalValuesRef {
                key: StoreKey::of(&cfg).digest(),
                panel,
            },
            tests,
        })
    };
    let unfiltered = arm(raw, z.len(), "test (unfiltered)")?;
    let filtered = arm(filtered, fit.residuals.len(), "test (filtered)")?;

    Ok(AnalysisReport {
        tool: ToolInfo::current(),
        options: opts.clone(),
        input,
        shuffle_seed,
        describe,
        prefilter,
        unfiltered,
        filtered,
    })
}
