//! Price and return series, time-scale aggregation, moments and shuffled
//! surrogates.

use std::ops::Range;

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trading-day block sizes used when no calendar dates are available.
pub const WEEK_BLOCK: usize = 5;
pub const MONTH_BLOCK: usize = 21;
pub const QUARTER_BLOCK: usize = 65;

/// Strictly positive price levels with optional, strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    values: Vec<f64>,
    dates: Option<Vec<NaiveDate>>,
}

impl PriceSeries {
    pub fn new(values: Vec<f64>, dates: Option<Vec<NaiveDate>>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "a price series needs at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some((i, p)) = values
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p > 0.0))
        {
            return Err(Error::invalid(format!(
                "price at index {i} is not strictly positive: {p}"
            )));
        }
        if let Some(d) = &dates {
            check_dates(d, values.len())?;
        }
        Ok(Self { values, dates })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dates(&self) -> Option<&[NaiveDate]> {
        self.dates.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_dates(dates: &[NaiveDate], len: usize) -> Result<()> {
    if dates.len() != len {
        return Err(Error::invalid(format!(
            "{} dates supplied for {} values",
            dates.len(),
            len
        )));
    }
    if let Some(i) = dates.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "dates must be strictly increasing: {} at index {} follows {}",
            dates[i + 1],
            i + 1,
            dates[i]
        )));
    }
    Ok(())
}

/// Time scale a return series is measured at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleLabel {
    Daily,
    Weekly,
    Monthly,
    Quarterly,
    Blocks(usize),
}

impl std::fmt::Display for ScaleLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScaleLabel::Daily => f.write_str("daily"),
            ScaleLabel::Weekly => f.write_str("weekly"),
            ScaleLabel::Monthly => f.write_str("monthly"),
            ScaleLabel::Quarterly => f.write_str("quarterly"),
            ScaleLabel::Blocks(k) => write!(f, "blocks({k})"),
        }
    }
}

/// Log returns, optionally dated.
///
/// `origin` is the date of the price the first return is measured from, when
/// known. Calendar aggregation uses it to decide whether the first block
/// starts from a previous-period close.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    values: Vec<f64>,
    dates: Option<Vec<NaiveDate>>,
    origin: Option<NaiveDate>,
    scale: ScaleLabel,
}

impl ReturnSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_returns(&values)?;
        Ok(Self::from_vec(values))
    }

    pub fn with_dates(values: Vec<f64>, dates: Vec<NaiveDate>) -> Result<Self> {
        check_returns(&values)?;
        check_dates(&dates, values.len())?;
        Ok(Self {
            values,
            dates: Some(dates),
            origin: None,
            scale: ScaleLabel::Daily,
        })
    }

    /// Unchecked constructor for values produced inside the crate.
    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        Self {
            values,
            dates: None,
            origin: None,
            scale: ScaleLabel::Daily,
        }
    }

    pub fn with_origin(mut self, origin: Option<NaiveDate>) -> Self {
        self.origin = origin;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dates(&self) -> Option<&[NaiveDate]> {
        self.dates.as_deref()
    }

    pub fn origin(&self) -> Option<NaiveDate> {
        self.origin
    }

    pub fn scale(&self) -> ScaleLabel {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.dates.as_ref().and_then(|d| d.first().copied())
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.dates.as_ref().and_then(|d| d.last().copied())
    }
}

fn check_returns(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid("return series is empty"));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("return at index {i} is not finite")));
    }
    Ok(())
}

/// `value_t = ln(p_{t+1} / p_t)`, dated by the later price.
pub fn log_returns(prices: &PriceSeries) -> ReturnSeries {
    let values = prices
        .values
        .windows(2)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    ReturnSeries {
        values,
        dates: prices.dates.as_ref().map(|d| d[1..].to_vec()),
        origin: prices.dates.as_ref().map(|d| d[0]),
        scale: ScaleLabel::Daily,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    CalendarWeek,
    CalendarMonth,
    CalendarQuarter,
    FixedBlock(usize),
}

impl AggregationMode {
    /// Calendar mode for `scale` when dates exist, trading-day blocks otherwise.
    pub fn for_scale(scale: ScaleLabel, has_dates: bool) -> Option<Self> {
        let mode = match (scale, has_dates) {
            (ScaleLabel::Daily, _) => AggregationMode::FixedBlock(1),
            (ScaleLabel::Weekly, true) => AggregationMode::CalendarWeek,
            (ScaleLabel::Monthly, true) => AggregationMode::CalendarMonth,
            (ScaleLabel::Quarterly, true) => AggregationMode::CalendarQuarter,
            (ScaleLabel::Weekly, false) => AggregationMode::FixedBlock(WEEK_BLOCK),
            (ScaleLabel::Monthly, false) => AggregationMode::FixedBlock(MONTH_BLOCK),
            (ScaleLabel::Quarterly, false) => AggregationMode::FixedBlock(QUARTER_BLOCK),
            (ScaleLabel::Blocks(k), _) if k > 0 => AggregationMode::FixedBlock(k),
            (ScaleLabel::Blocks(_), _) => return None,
        };
        Some(mode)
    }

    fn label(self) -> ScaleLabel {
        match self {
            AggregationMode::CalendarWeek => ScaleLabel::Weekly,
            AggregationMode::CalendarMonth => ScaleLabel::Monthly,
            AggregationMode::CalendarQuarter => ScaleLabel::Quarterly,
            AggregationMode::FixedBlock(1) => ScaleLabel::Daily,
            AggregationMode::FixedBlock(k) => ScaleLabel::Blocks(k),
        }
    }

    fn period_key(self, d: NaiveDate) -> (i32, u32) {
        match self {
            AggregationMode::CalendarWeek => {
                let w = d.iso_week();
                (w.year(), w.week())
            }
            AggregationMode::CalendarMonth => (d.year(), d.month()),
            AggregationMode::CalendarQuarter => (d.year(), (d.month() - 1) / 3),
            AggregationMode::FixedBlock(_) => unreachable!("fixed blocks have no calendar key"),
        }
    }
}

/// Contiguous, non-overlapping index ranges over a series.
///
/// Calendar blocks group consecutive observations falling in the same ISO
/// week, month or quarter. The first calendar block is dropped when the
/// series origin lies in the same period as the first return (its opening
/// price is not a previous-period close); the last block is kept as is.
/// Fixed blocks drop the trailing partial block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationPlan {
    pub mode: AggregationMode,
    pub blocks: Vec<Range<usize>>,
}

impl AggregationPlan {
    pub fn build(mode: AggregationMode, r: &ReturnSeries) -> Result<Self> {
        let blocks = match mode {
            AggregationMode::FixedBlock(0) => {
                return Err(Error::config("block size must be at least 1"))
            }
            AggregationMode::FixedBlock(k) => {
                (0..r.len() / k).map(|b| b * k..(b + 1) * k).collect()
            }
            _ => {
                let dates = r.dates().ok_or_else(|| {
                    Error::config(format!("{mode:?} aggregation requires dated returns"))
                })?;
                let mut blocks: Vec<Range<usize>> = Vec::new();
                let mut start = 0;
                for i in 1..=dates.len() {
                    if i == dates.len()
                        || mode.period_key(dates[i]) != mode.period_key(dates[start])
                    {
                        blocks.push(start..i);
                        start = i;
                    }
                }
                let leading_partial = r
                    .origin()
                    .is_some_and(|o| mode.period_key(o) == mode.period_key(dates[0]));
                if leading_partial {
                    blocks.remove(0);
                }
                blocks
            }
        };
        Ok(Self { mode, blocks })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Sums returns within each block of `plan`; each output carries its block-end date.
///
/// The plan may come from another series of the same length (for example the
/// original series of a shuffled surrogate).
pub fn aggregate(r: &ReturnSeries, plan: &AggregationPlan) -> Result<ReturnSeries> {
    if let Some(last) = plan.blocks.last() {
        if last.end > r.len() {
            return Err(Error::invalid(format!(
                "aggregation plan covers {} observations but the series has {}",
                last.end,
                r.len()
            )));
        }
    }
    if plan.is_empty() {
        return Err(Error::invalid(format!(
            "series of {} observations yields no complete {:?} block",
            r.len(),
            plan.mode
        )));
    }
    let values = plan
        .blocks
        .iter()
        .map(|b| r.values[b.clone()].iter().sum())
        .collect();
    let dates = r
        .dates
        .as_ref()
        .map(|d| plan.blocks.iter().map(|b| d[b.end - 1]).collect());
    let first = plan.blocks[0].start;
    let origin = match (first, r.dates()) {
        (0, _) => r.origin,
        (i, Some(d)) => Some(d[i - 1]),
        (_, None) => None,
    };
    Ok(ReturnSeries {
        values,
        dates,
        origin,
        scale: plan.mode.label(),
    })
}

/// First four moments of a return series.
///
/// `std_dev` uses divisor N − 1; skewness and kurtosis are ratios of central
/// moments with divisor N, and are `None` when the variance is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n_obs: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
}

impl DescriptiveStats {
    /// Skewness and kurtosis, or an error for a zero-variance series.
    pub fn shape(&self) -> Result<(f64, f64)> {
        match (self.skewness, self.kurtosis) {
            (Some(s), Some(k)) => Ok((s, k)),
            _ => Err(Error::degenerate(
                "skewness and kurtosis are undefined for a zero-variance series",
            )),
        }
    }
}

pub fn describe(r: &ReturnSeries) -> Result<DescriptiveStats> {
    let x = r.values();
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "descriptive statistics need at least 2 observations, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let constant = x.iter().all(|v| *v == x[0]);
    if constant {
        return Ok(DescriptiveStats {
            n_obs: n,
            mean: x[0],
            std_dev: 0.0,
            skewness: None,
            kurtosis: None,
        });
    }
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let std_dev = (m2 / (nf - 1.0)).sqrt();
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    Ok(DescriptiveStats {
        n_obs: n,
        mean,
        std_dev,
        skewness: Some(m3 / m2.powf(1.5)),
        kurtosis: Some(m4 / (m2 * m2)),
    })
}

/// Seeded Fisher–Yates permutation of the values. Dates stay in place so the
/// surrogate can be re-aggregated with the original block boundaries.
pub fn shuffle_surrogate(r: &ReturnSeries, seed: u64) -> ReturnSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = r.clone();
    out.values.shuffle(&mut rng);
    out
}
