//! Rescaled range analysis.
//!
//! For a scale `n` the series is cut into `M = ⌊N/n⌋` subperiods from the
//! start and, when `N` is not a multiple of `n`, again from observation
//! `L + 1` with `L = N − nM`, so that no observation is left unused. Each
//! subperiod contributes `R_m / S_m`, where `S_m` is the population standard
//! deviation and `R_m` the range of cumulative mean deviations (the terminal
//! deviation, which is zero, included). `(R/S)_n` is the mean over all `2M`
//! subperiods and the Hurst exponent is the OLS slope of `ln (R/S)_n` on
//! `ln n`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ols;

pub const DEFAULT_KNOT: usize = 40;
pub const MIN_SCALE: usize = 4;
/// Minimum number of grid points in a regression (and on each side of a knot).
pub const MIN_POINTS: usize = 3;

/// Log-spaced grid definition: `n = round(e^x)` for `x = ln_min, ln_min + step, …, ln_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub ln_min: f64,
    pub ln_max: f64,
    pub step: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            ln_min: 1.6,
            ln_max: 5.7,
            step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleGrid {
    scales: Vec<usize>,
}

impl ScaleGrid {
    pub fn new(scales: Vec<usize>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::config("scale grid is empty"));
        }
        if scales[0] < MIN_SCALE {
            return Err(Error::config(format!(
                "smallest scale {} is below {MIN_SCALE}",
                scales[0]
            )));
        }
        if scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("scales must be strictly increasing"));
        }
        Ok(Self { scales })
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// Scales not exceeding `n_obs / 2`; the others are dropped with a warning.
    pub fn usable_for(&self, n_obs: usize) -> Vec<usize> {
        let max = n_obs / 2;
        let kept: Vec<usize> = self.scales.iter().copied().filter(|&n| n <= max).collect();
        if kept.len() < self.scales.len() {
            log::warn!(
                "dropping {} grid scales above N/2 = {} for a series of {} observations",
                self.scales.len() - kept.len(),
                max,
                n_obs
            );
        }
        kept
    }
}

pub fn build_scale_grid(params: &GridParams) -> Result<ScaleGrid> {
    let GridParams {
        ln_min,
        ln_max,
        step,
    } = *params;
    if !(ln_min.is_finite() && ln_max.is_finite() && ln_min < ln_max) {
        return Err(Error::config(format!(
            "grid bounds must satisfy ln_min < ln_max, got {ln_min} and {ln_max}"
        )));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::config(format!(
            "grid step must be positive, got {step}"
        )));
    }
    // Tolerate accumulated representation error at the upper bound.
    let count = ((ln_max - ln_min) / step + 1e-9).floor() as usize + 1;
    let mut scales: Vec<usize> = (0..count)
        .map(|k| (ln_min + k as f64 * step).exp().round() as usize)
        .collect();
    scales.dedup();
    ScaleGrid::new(scales)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsPoint {
    pub n: usize,
    pub rs: f64,
    /// Number of subperiods averaged, `2M`.
    pub subperiods: usize,
}

/// `R/S` of one subperiod, or `None` when its standard deviation vanishes.
fn rescaled_range(w: &[f64]) -> Option<f64> {
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let (mut cum, mut hi, mut lo, mut ss) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (head, last) = w.split_at(w.len() - 1);
    for v in head {
        let d = v - mean;
        cum += d;
        hi = hi.max(cum);
        lo = lo.min(cum);
        ss += d * d;
    }
    let d = last[0] - mean;
    ss += d * d;
    let s = (ss / n).sqrt();
    let magnitude = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if s == 0.0 || s <= 1e-12 * magnitude {
        return None;
    }
    Some((hi - lo) / s)
}

pub fn rs_statistic(z: &[f64], n: usize) -> Result<RsPoint> {
    if n < MIN_SCALE {
        return Err(Error::config(format!("scale {n} is below {MIN_SCALE}")));
    }
    let total = z.len();
    let m = total / n;
    if m == 0 {
        return Err(Error::config(format!(
            "scale {n} exceeds the series length {total}"
        )));
    }
    let offset = total - m * n;
    let pass = |start: usize, label: usize| -> Result<f64> {
        let mut acc = 0.0;
        for (i, w) in z[start..start + m * n].chunks_exact(n).enumerate() {
            acc += rescaled_range(w).ok_or_else(|| {
                Error::degenerate(format!(
                    "zero standard deviation in subperiod {} (observations {}..{}) at scale {n}",
                    label + i + 1,
                    start + i * n + 1,
                    start + (i + 1) * n
                ))
            })?;
        }
        Ok(acc)
    };
    let forward = pass(0, 0)?;
    let rs = if offset == 0 {
        // Both passes coincide.
        forward / m as f64
    } else {
        (forward + pass(offset, m)?) / (2 * m) as f64
    };
    Ok(RsPoint {
        n,
        rs,
        subperiods: 2 * m,
    })
}

/// `(R/S)_n` for every grid scale usable with `z.len()` observations.
pub fn rs_points(z: &[f64], grid: &ScaleGrid) -> Result<Vec<RsPoint>> {
    grid.usable_for(z.len())
        .into_iter()
        .map(|n| rs_statistic(z, n))
        .collect()
}

/// Continuous piecewise-linear fit of `ln (R/S)_n` with one knot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFit {
    pub knot: usize,
    /// Slope for `n ≤ knot`.
    pub h_short: f64,
    /// Slope for `n ≥ knot`.
    pub h_long: f64,
    pub intercept_short: f64,
    pub intercept_long: f64,
}

impl SplitFit {
    /// Fitted `ln (R/S)_n`.
    pub fn predict(&self, n: f64) -> f64 {
        let x = n.ln();
        if n <= self.knot as f64 {
            self.intercept_short + self.h_short * x
        } else {
            self.intercept_long + self.h_long * x
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RraResult {
    pub h: f64,
    /// `ln c` in `ln (R/S)_n = ln c + H ln n`.
    pub intercept: f64,
    pub split: Option<SplitFit>,
    pub points: Vec<RsPoint>,
}

impl RraResult {
    /// Fits the single-slope regression and, if `knot` is given, the spline.
    pub fn from_points(points: Vec<RsPoint>, knot: Option<usize>) -> Result<Self> {
        if points.len() < MIN_POINTS {
            return Err(Error::config(format!(
                "{} usable grid points; at least {MIN_POINTS} are required",
                points.len()
            )));
        }
        let x: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
        let y: Vec<f64> = points.iter().map(|p| p.rs.ln()).collect();
        let (intercept, h) = ols::simple(&x, &y)?;
        let split = knot.map(|k| fit_spline(&points, &x, &y, k)).transpose()?;
        Ok(Self {
            h,
            intercept,
            split,
            points,
        })
    }

    pub fn h_short(&self) -> Option<f64> {
        self.split.map(|s| s.h_short)
    }

    pub fn h_long(&self) -> Option<f64> {
        self.split.map(|s| s.h_long)
    }
}

fn fit_spline(points: &[RsPoint], x: &[f64], y: &[f64], knot: usize) -> Result<SplitFit> {
    if !points.iter().any(|p| p.n == knot) {
        return Err(Error::config(format!(
            "knot {knot} is not a usable grid scale"
        )));
    }
    let below = points.iter().filter(|p| p.n <= knot).count();
    let above = points.iter().filter(|p| p.n >= knot).count();
    if below < MIN_POINTS || above < MIN_POINTS {
        return Err(Error::config(format!(
            "knot {knot} leaves {below} points below and {above} above; {MIN_POINTS} needed on each side"
        )));
    }
    let lk = (knot as f64).ln();
    let design = DMatrix::from_fn(x.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => x[i],
        _ => (x[i] - lk).max(0.0),
    });
    let beta = ols::lstsq(design, &DVector::from_column_slice(y))?;
    Ok(SplitFit {
        knot,
        h_short: beta[1],
        h_long: beta[1] + beta[2],
        intercept_short: beta[0],
        intercept_long: beta[0] - beta[2] * lk,
    })
}

pub fn estimate_hurst(z: &[f64], grid: &ScaleGrid) -> Result<RraResult> {
    RraResult::from_points(rs_points(z, grid)?, None)
}

/// Single-slope fit plus the split-scale spline with a knot at `knot`.
pub fn estimate_hurst_split(z: &[f64], grid: &ScaleGrid, knot: usize) -> Result<RraResult> {
    RraResult::from_points(rs_points(z, grid)?, Some(knot))
}

/// Hurst exponent from the growth of aggregated variance: half the OLS slope
/// of `ln Var(n-sums)` on `ln n`, using non-overlapping blocks.
pub fn variance_scaling_hurst(z: &[f64], grid: &ScaleGrid) -> Result<f64> {
    let max = *grid.scales().last().expect("grid is non-empty");
    if z.len() < 2 * max {
        return Err(Error::config(format!(
            "variance scaling needs at least {} observations for scale {max}, got {}",
            2 * max,
            z.len()
        )));
    }
    let mut x = Vec::with_capacity(grid.len());
    let mut y = Vec::with_capacity(grid.len());
    for &n in grid.scales() {
        let sums: Vec<f64> = z.chunks_exact(n).map(|c| c.iter().sum()).collect();
        let k = sums.len() as f64;
        let mean = sums.iter().sum::<f64>() / k;
        let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / k;
        let magnitude = sums.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if var == 0.0 || var.sqrt() <= 1e-12 * magnitude {
            return Err(Error::degenerate(format!(
                "aggregated returns have zero variance at scale {n}"
            )));
        }
        x.push((n as f64).ln());
        y.push(var.ln());
    }
    let (_, slope) = ols::simple(&x, &y)?;
    Ok(slope / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Direct evaluation of the subperiod formulas with an explicit list of
    /// subperiod start offsets, no shortcuts.
    fn rs_reference(z: &[f64], n: usize) -> f64 {
        let m = z.len() / n;
        let l = z.len() - m * n;
        let starts: Vec<usize> = (0..m)
            .map(|i| i * n)
            .chain((0..m).map(|i| l + i * n))
            .collect();
        let mut total = 0.0;
        for s in &starts {
            let w = &z[*s..*s + n];
            let mu = w.iter().sum::<f64>() / n as f64;
            let sd = (w.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n as f64).sqrt();
            let mut xs: Vec<f64> = (1..n)
                .map(|t| w[..t].iter().map(|v| v - mu).sum::<f64>())
                .collect();
            xs.push(0.0);
            let r = xs.iter().cloned().fold(f64::MIN, f64::max)
                - xs.iter().cloned().fold(f64::MAX, f64::min);
            total += r / sd;
        }
        total / starts.len() as f64
    }

    #[test]
    fn default_grid_reproduction() {
        let grid = build_scale_grid(&GridParams::default()).unwrap();
        assert_eq!(
            grid.scales(),
            &[
                5, 6, 7, 8, 9, 10, 11, 12, 13, 15, 16, 18, 20, 22, 25, 27, 30, 33, 37, 40, 45, 49,
                55, 60, 67, 74, 81, 90, 99, 110, 122, 134, 148, 164, 181, 200, 221, 245, 270, 299
            ]
        );
    }

    #[test]
    fn grid_rejects_bad_params() {
        let bad = GridParams {
            ln_min: 2.0,
            ln_max: 1.0,
            step: 0.1,
        };
        assert!(build_scale_grid(&bad).is_err());
        let bad = GridParams {
            step: 0.0,
            ..GridParams::default()
        };
        assert!(build_scale_grid(&bad).is_err());
        let bad = GridParams {
            ln_min: 0.5,
            ..GridParams::default()
        };
        assert!(build_scale_grid(&bad).is_err());
    }

    #[test]
    fn hand_evaluated_rs() {
        let p = rs_statistic(&[1.0, -1.0, 1.0, -1.0], 4).unwrap();
        assert_abs_diff_eq!(p.rs, 1.0, epsilon = 1e-15);
        assert_eq!(p.subperiods, 2);
        let p = rs_statistic(&[1.0, 1.0, -1.0, -1.0], 4).unwrap();
        assert_abs_diff_eq!(p.rs, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn rs_matches_reference_with_leftover() {
        let z: Vec<f64> = (0..103)
            .map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.3 + (i as f64 * 0.7).sin())
            .collect();
        for n in [4, 5, 7, 10, 13, 25, 51] {
            let p = rs_statistic(&z, n).unwrap();
            assert_abs_diff_eq!(p.rs, rs_reference(&z, n), epsilon = 1e-12);
            assert_eq!(p.subperiods, 2 * (103 / n));
        }
    }

    #[test]
    fn exact_multiple_uses_forward_subperiods() {
        let z: Vec<f64> = (0..40)
            .map(|i| ((i * 7 % 5) as f64) - 2.0 + 0.1 * i as f64)
            .collect();
        let p = rs_statistic(&z, 8).unwrap();
        let forward: f64 = z.chunks(8).map(|w| rs_reference(w, 8)).sum::<f64>() / 5.0;
        assert_abs_diff_eq!(p.rs, forward, epsilon = 1e-12);
        assert_eq!(p.subperiods, 10);
    }

    #[test]
    fn zero_variance_subperiod_is_an_error() {
        let mut z: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        for v in &mut z[10..15] {
            *v = 0.0;
        }
        let err = rs_statistic(&z, 5).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
        assert!(err.to_string().contains("subperiod 3"), "{err}");
    }

    #[test]
    fn rs_preconditions() {
        assert!(rs_statistic(&[1.0, 2.0, 3.0], 3).is_err());
        assert!(rs_statistic(&[1.0, 2.0, 3.0], 4).is_err());
    }

    #[test]
    fn too_few_points_rejected() {
        let grid = ScaleGrid::new(vec![4, 5]).unwrap();
        let z: Vec<f64> = (0..50).map(|i| (i as f64 * 1.3).sin()).collect();
        assert!(estimate_hurst(&z, &grid).is_err());
    }

    #[test]
    fn large_scales_are_dropped_for_short_series() {
        let grid = build_scale_grid(&GridParams::default()).unwrap();
        let z: Vec<f64> = (0..200).map(|i| ((i * 7919) % 101) as f64).collect();
        let r = estimate_hurst(&z, &grid).unwrap();
        assert_eq!(r.points.last().unwrap().n, 99);
    }

    #[test]
    fn spline_needs_knot_in_grid_and_points_each_side() {
        let grid = build_scale_grid(&GridParams::default()).unwrap();
        let z: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 101) as f64).collect();
        assert!(estimate_hurst_split(&z, &grid, 41).is_err());
        assert!(estimate_hurst_split(&z, &grid, 6).is_err());
        assert!(estimate_hurst_split(&z, &grid, 40).is_ok());
    }

    #[test]
    fn spline_is_continuous_and_reduces_to_line() {
        // Exact power law: both slopes equal the single exponent.
        let points: Vec<RsPoint> = [5usize, 8, 12, 20, 40, 60, 100, 150]
            .iter()
            .map(|&n| RsPoint {
                n,
                rs: 0.8 * (n as f64).powf(0.6),
                subperiods: 2,
            })
            .collect();
        let r = RraResult::from_points(points, Some(40)).unwrap();
        let s = r.split.unwrap();
        assert_abs_diff_eq!(r.h, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s.h_short, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s.h_long, 0.6, epsilon = 1e-12);
        let lk = 40f64.ln();
        assert_abs_diff_eq!(
            s.intercept_short + s.h_short * lk,
            s.intercept_long + s.h_long * lk,
            epsilon = 1e-14
        );
    }

    #[test]
    fn variance_scaling_rejects_constant_and_short() {
        let grid = ScaleGrid::new(vec![4, 8, 16]).unwrap();
        assert!(matches!(
            variance_scaling_hurst(&[1.0; 64], &grid),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            variance_scaling_hurst(&[1.0; 20], &grid),
            Err(Error::Config(_))
        ));
    }
}
