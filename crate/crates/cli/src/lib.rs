//! Command-line front end: argument parsing, the `analyze` pipeline, the
//! critical-values store and report rendering.

pub mod args;
pub mod error;
pub mod render;
pub mod report;
pub mod store;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use longmem::arfima::{simulate, ArfimaSpec, SimConfig};
use longmem::io::write_returns;
use longmem::mc::{
    null_panel, power_analysis, prefilter_bias_study, BiasStudy, BiasStudyConfig, McConfig,
    NullPanel, PowerConfig, PowerResult, PrefilterMode,
};
use longmem::rra::{build_scale_grid, estimate_hurst_split, RraResult};
use longmem::series::{shuffle_surrogate, ReturnSeries};
use serde::{Deserialize, Serialize};

use crate::args::{BiasStudyArgs, Cli, Command, CriticalValuesArgs, Format, Preset};
use crate::error::{CliError, StageExt, EXIT_CONFIG};
use crate::report::{
    analyze, describe_scales, load_returns, run_prefilter, shuffle_seed, AnalysisReport,
    AnalyzeOptions, InputMeta, PrefilterSummary, ScaleStats, ToolInfo,
};
use crate::store::{fetch_panel, CriticalValuesStore, StoreKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RraReport {
    pub tool: ToolInfo,
    pub input: InputMeta,
    pub prefilter: PrefilterMode,
    pub estimator: longmem::mc::EstimatorConfig,
    pub n_obs: usize,
    pub result: RraResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefilterReport {
    pub tool: ToolInfo,
    pub input: InputMeta,
    pub fit: PrefilterSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValuesReport {
    pub tool: ToolInfo,
    pub key: String,
    pub config: StoreKey,
    pub panel: NullPanel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub tool: ToolInfo,
    pub result: PowerResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub tool: ToolInfo,
    pub result: BiasStudy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescribeReport {
    pub tool: ToolInfo,
    pub input: InputMeta,
    pub shuffle_seed: u64,
    pub scales: Vec<ScaleStats>,
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    longmem::mc::with_workers(cli.workers, || dispatch(cli))?
}

fn open_store(dir: &Option<PathBuf>) -> Result<Option<CriticalValuesStore>, CliError> {
    dir.as_ref().map(CriticalValuesStore::open).transpose()
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze(a) => {
            let opts = AnalyzeOptions {
                input: a.input.clone(),
                seed: a.seed.seed,
                replications: a.reps,
                alpha: a.alpha,
                tail: a.tail.into(),
                prefilter: a.prefilter.clone(),
                estimator: a.estimator.config(),
            };
            let report = analyze(&opts, open_store(&a.store)?.as_ref())?;
            emit(cli, &report, || render::analysis(&report))
        }
        Command::Replay { report, store } => {
            let bytes = std::fs::read(report).map_err(|e| CliError::io(report.display(), e))?;
            let old: AnalysisReport =
                serde_json::from_slice(&bytes).map_err(|source| CliError::Json {
                    path: report.display().to_string(),
                    source,
                })?;
            let new = analyze(&old.options, open_store(store)?.as_ref())?;
            emit(cli, &new, || render::analysis(&new))
        }
        Command::Simulate(s) => {
            let mut spec = ArfimaSpec {
                d: s.d,
                innovation_sd: s.sd,
                ..ArfimaSpec::default()
            };
            for &(lag, c) in &s.ar {
                spec = spec.with_ar(lag, c);
            }
            let mut cfg = SimConfig::new(s.length, s.seed.seed);
            if let Some(b) = s.burn_in {
                cfg.burn_in = b;
            }
            let series = simulate(&spec, &cfg).stage("simulate")?;
            write_csv(cli.output.as_deref(), &series)
        }
        Command::Rra {
            input,
            estimator,
            prefilter,
        } => {
            let (r, meta) = load_returns(input)?;
            let z = prefilter.apply(r.values()).stage("prefilter")?;
            let cfg = estimator.config();
            let grid = build_scale_grid(&cfg.grid).stage("scale grid")?;
            let result = estimate_hurst_split(&z, &grid, cfg.knot).stage("rra")?;
            let report = RraReport {
                tool: ToolInfo::current(),
                input: meta,
                prefilter: prefilter.clone(),
                estimator: cfg,
                n_obs: z.len(),
                result,
            };
            emit(cli, &report, || render::rra(&report.result))
        }
        Command::Prefilter {
            input,
            lags,
            residuals,
        } => {
            let (r, meta) = load_returns(input)?;
            let mode = lags
                .clone()
                .map_or(PrefilterMode::PacfSparse, PrefilterMode::FixedLags);
            let (fit, summary) = run_prefilter(r.values(), &mode).stage("prefilter")?;
            if let Some(path) = residuals {
                let skip = r.len() - fit.residuals.len();
                let series = match r.dates() {
                    Some(d) => ReturnSeries::with_dates(fit.residuals, d[skip..].to_vec()),
                    None => ReturnSeries::new(fit.residuals),
                }
                .stage("prefilter")?;
                write_csv(Some(path), &series)?;
            }
            let report = PrefilterReport {
                tool: ToolInfo::current(),
                input: meta,
                fit: summary,
            };
            emit(cli, &report, || {
                let mut s = String::new();
                render::prefilter(&mut s, &report.fit);
                s
            })
        }
        Command::CriticalValues(c) => critical_values(cli, c),
        Command::Power(p) => {
            let cfg = PowerConfig {
                h_grid: p.h.clone(),
                lengths: p.lengths.clone(),
                alpha: p.alpha,
                tail: p.tail.into(),
                replications: p.reps,
                master_seed: p.seed.seed,
                estimator: p.estimator.config(),
            };
            let report = PowerReport {
                tool: ToolInfo::current(),
                result: power_analysis(&cfg).stage("power")?,
            };
            emit(cli, &report, || render::power(&report.result))
        }
        Command::BiasStudy(b) => {
            let report = BiasReport {
                tool: ToolInfo::current(),
                result: prefilter_bias_study(&bias_config(b)).stage("bias study")?,
            };
            emit(cli, &report, || render::bias(&report.result))
        }
        Command::Describe { input, seed } => {
            let (r, meta) = load_returns(input)?;
            let shuffle_seed = shuffle_seed(seed.seed);
            let report = DescribeReport {
                tool: ToolInfo::current(),
                scales: describe_scales(&r, shuffle_seed)?,
                input: meta,
                shuffle_seed,
            };
            emit(cli, &report, || {
                render::describe(&report.input, &report.scales)
            })
        }
        Command::Shuffle { input, seed } => {
            let (r, _) = load_returns(input)?;
            write_csv(
                cli.output.as_deref(),
                &shuffle_surrogate(&r, shuffle_seed(seed.seed)),
            )
        }
    }
}

fn bias_config(b: &BiasStudyArgs) -> BiasStudyConfig {
    let cfg = match b.preset {
        Preset::Ar1Grid => BiasStudyConfig::ar1_grid(b.length, b.reps, b.seed.seed),
        Preset::Lag4 => {
            BiasStudyConfig::sparse_lag4(&[0.0, 0.12], 0.0782, b.length, b.reps, b.seed.seed)
        }
    };
    BiasStudyConfig {
        estimator: b.estimator.config(),
        ..cfg
    }
}

fn critical_values(cli: &Cli, c: &CriticalValuesArgs) -> Result<(), CliError> {
    let cfg = McConfig {
        prefilter: c.prefilter.clone(),
        estimator: c.estimator.config(),
        ..McConfig::new(c.length, c.reps, c.seed.seed)
    };
    let store = open_store(&c.store)?;
    let key = StoreKey::of(&cfg);
    let panel = match &c.dump_replicates {
        // Per-replicate records are not cached, so dumping always recomputes.
        Some(path) => {
            let panel = null_panel(&cfg).stage("critical values")?;
            dump_replicates(path, &panel)?;
            if let Some(s) = &store {
                s.put(&key, &panel)?;
            }
            panel
        }
        None => fetch_panel(store.as_ref(), &cfg)?,
    };
    let report = CriticalValuesReport {
        tool: ToolInfo::current(),
        key: key.digest(),
        config: key,
        panel,
    };
    emit(cli, &report, || render::panel(&report.panel))
}

fn dump_replicates(path: &Path, panel: &NullPanel) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::io(path.display(), e);
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(e.into()))?;
    let mut write = || -> csv::Result<()> {
        w.write_record(["index", "seed", "h", "h_s", "h_l", "error"])?;
        for r in &panel.replicates {
            let est = |f: fn(&longmem::mc::Estimates) -> f64| {
                r.estimates
                    .as_ref()
                    .map_or(String::new(), |e| f(e).to_string())
            };
            w.write_record([
                r.index.to_string(),
                r.seed.to_string(),
                est(|e| e.h),
                est(|e| e.h_short),
                est(|e| e.h_long),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| io_err(e.into()))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::io(p.display(), e))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_csv(path: Option<&Path>, r: &ReturnSeries) -> Result<(), CliError> {
    let mut w = open_output(path)?;
    write_returns(&mut w, r)?;
    w.flush().map_err(|e| CliError::io("output", e))
}

fn emit<T: Serialize>(
    cli: &Cli,
    value: &T,
    table: impl FnOnce() -> String,
) -> Result<(), CliError> {
    let text = match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).expect("reports serialise");
            s.push('\n');
            s
        }
        Format::Table => table(),
    };
    let mut w = open_output(cli.output.as_deref())?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io("output", e))
}
