//! Short-range dependence filter: sample correlogram, PACF lag selection and a
//! sparse AR fit on the selected lags only.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ols;

pub const MAX_LAG: usize = 10;
/// Two-sided 5% critical value of the standard normal.
pub const Z_975: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelogramResult {
    /// Autocorrelations at lags `0..=max_lag`.
    pub acf: Vec<f64>,
    /// Partial autocorrelations at lags `1..=max_lag` (index 0 is lag 1).
    pub pacf: Vec<f64>,
    pub n_obs: usize,
    /// Significance band `1.96 / √N`.
    pub threshold: f64,
}

impl CorrelogramResult {
    pub fn max_lag(&self) -> usize {
        self.pacf.len()
    }

    pub fn pacf_at(&self, lag: usize) -> f64 {
        self.pacf[lag - 1]
    }
}

pub fn significance_band(n_obs: usize) -> f64 {
    Z_975 / (n_obs as f64).sqrt()
}

pub fn correlogram(z: &[f64], max_lag: usize) -> Result<CorrelogramResult> {
    let n = z.len();
    if max_lag == 0 || n <= max_lag {
        return Err(Error::config(format!(
            "correlogram to lag {max_lag} needs more than {max_lag} observations, got {n}"
        )));
    }
    if n <= 10 * max_lag {
        log::warn!("correlogram to lag {max_lag} on only {n} observations");
    }
    let mean = z.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = z.iter().map(|v| v - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom == 0.0 || z.iter().all(|v| *v == z[0]) {
        return Err(Error::degenerate("zero-variance series has no correlogram"));
    }
    let acf: Vec<f64> = (0..=max_lag)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                dev[k..].iter().zip(&dev).map(|(a, b)| a * b).sum::<f64>() / denom
            }
        })
        .collect();
    Ok(CorrelogramResult {
        pacf: durbin_levinson(&acf),
        acf,
        n_obs: n,
        threshold: significance_band(n),
    })
}

/// Partial autocorrelations φ_kk for k = 1..p from autocorrelations r_0..r_p.
fn durbin_levinson(r: &[f64]) -> Vec<f64> {
    let p = r.len() - 1;
    let mut pacf = Vec::with_capacity(p);
    let mut phi: Vec<f64> = Vec::with_capacity(p);
    for k in 1..=p {
        let num = r[k] - (1..k).map(|j| phi[j - 1] * r[k - j]).sum::<f64>();
        let den = 1.0 - (1..k).map(|j| phi[j - 1] * r[j]).sum::<f64>();
        let kk = num / den;
        let next: Vec<f64> = (1..k)
            .map(|j| phi[j - 1] - kk * phi[k - j - 1])
            .chain(std::iter::once(kk))
            .collect();
        phi = next;
        pacf.push(kk);
    }
    pacf
}

/// Lags whose PACF lies outside the ±1.96/√N band.
pub fn select_lags(c: &CorrelogramResult) -> Vec<usize> {
    c.pacf
        .iter()
        .enumerate()
        .filter(|(_, p)| p.abs() > c.threshold)
        .map(|(i, _)| i + 1)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseArFit {
    pub selected_lags: Vec<usize>,
    pub coefficients: BTreeMap<usize, f64>,
    pub intercept: f64,
    /// `N − max(selected_lags)` residuals, or the input when no lag is selected.
    pub residuals: Vec<f64>,
}

/// OLS of `z_t` on an intercept and `z_{t−k}` for `k` in `lags` only.
pub fn fit_sparse_ar(z: &[f64], lags: &[usize]) -> Result<SparseArFit> {
    if let Some(bad) = lags.iter().find(|&&k| k == 0 || k > MAX_LAG) {
        return Err(Error::config(format!("AR lag {bad} outside 1..={MAX_LAG}")));
    }
    if lags.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("AR lags must be strictly increasing"));
    }
    if lags.is_empty() {
        return Ok(SparseArFit {
            selected_lags: Vec::new(),
            coefficients: BTreeMap::new(),
            intercept: 0.0,
            residuals: z.to_vec(),
        });
    }
    let n = z.len();
    if n <= MAX_LAG + lags.len() + 2 {
        return Err(Error::config(format!(
            "{n} observations are too few for an AR fit on {} lags",
            lags.len()
        )));
    }
    let p = *lags.last().expect("non-empty");
    let rows = n - p;
    let design = DMatrix::from_fn(rows, lags.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            z[p + i - lags[j - 1]]
        }
    });
    let y = DVector::from_column_slice(&z[p..]);
    let beta = ols::lstsq(design.clone(), &y)
        .map_err(|e| Error::degenerate(format!("AR fit on lags {lags:?}: {e}")))?;
    let fitted = design * &beta;
    let residuals = (y - fitted).iter().copied().collect();
    Ok(SparseArFit {
        selected_lags: lags.to_vec(),
        coefficients: lags
            .iter()
            .zip(beta.iter().skip(1))
            .map(|(&k, &b)| (k, b))
            .collect(),
        intercept: beta[0],
        residuals,
    })
}

/// Correlogram to lag 10, PACF lag selection, sparse AR fit.
pub fn prefilter(z: &[f64]) -> Result<SparseArFit> {
    let c = correlogram(z, MAX_LAG)?;
    fit_sparse_ar(z, &select_lags(&c))
}
