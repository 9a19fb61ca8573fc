//! ARFIMA(p, d, 0) simulation with sparse AR structure.
//!
//! Fractional noise is generated as a truncated MA(∞) expansion of
//! `(1 − L)^(−d)` applied to Gaussian innovations, and the AR recursion is run
//! on top of it, i.e. `(1 − Σ φ_i L^i)(1 − L)^d x_t = ε_t`. The expansion is
//! truncated at `max(1000, T)` lags and a burn-in of the same length is
//! discarded by default.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::ReturnSeries;

pub const MAX_AR_LAG: usize = 10;
pub const MIN_TRUNCATION: usize = 1000;
pub const MIN_LENGTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArfimaSpec {
    /// Sparse AR coefficients keyed by lag (1..=10).
    pub ar: BTreeMap<usize, f64>,
    /// Fractional integration order, |d| < 0.5.
    pub d: f64,
    pub innovation_sd: f64,
}

impl Default for ArfimaSpec {
    fn default() -> Self {
        Self {
            ar: BTreeMap::new(),
            d: 0.0,
            innovation_sd: 1.0,
        }
    }
}

impl ArfimaSpec {
    pub fn fractional(d: f64) -> Self {
        Self {
            d,
            ..Self::default()
        }
    }

    pub fn with_ar(mut self, lag: usize, coeff: f64) -> Self {
        self.ar.insert(lag, coeff);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d.is_finite() && self.d.abs() < 0.5) {
            return Err(Error::config(format!(
                "fractional order d = {} is outside (-0.5, 0.5)",
                self.d
            )));
        }
        if !(self.innovation_sd.is_finite() && self.innovation_sd > 0.0) {
            return Err(Error::config(format!(
                "innovation sd must be positive, got {}",
                self.innovation_sd
            )));
        }
        if let Some((&lag, _)) = self
            .ar
            .iter()
            .find(|(lag, c)| **lag == 0 || **lag > MAX_AR_LAG || !c.is_finite())
        {
            return Err(Error::config(format!(
                "AR lag {lag} must lie in 1..={MAX_AR_LAG} with a finite coefficient"
            )));
        }
        if !ar_is_stationary(&self.dense_ar()) {
            return Err(Error::config(format!(
                "AR polynomial {:?} is not stationary",
                self.ar
            )));
        }
        Ok(())
    }

    /// Coefficients φ_1..φ_p with zeros for absent lags.
    pub fn dense_ar(&self) -> Vec<f64> {
        let p = self.ar.keys().next_back().copied().unwrap_or(0);
        let mut phi = vec![0.0; p];
        for (&lag, &c) in &self.ar {
            phi[lag - 1] = c;
        }
        phi
    }
}

/// Stationarity of `x_t = Σ φ_i x_{t−i} + ε_t` via the Levinson step-down
/// recursion: the process is stationary iff every reflection coefficient has
/// modulus below one.
pub fn ar_is_stationary(phi: &[f64]) -> bool {
    let mut a = phi.to_vec();
    while let Some(&kappa) = a.last() {
        if kappa.abs() >= 1.0 {
            return false;
        }
        let k = a.len();
        let denom = 1.0 - kappa * kappa;
        let prev: Vec<f64> = (0..k - 1)
            .map(|j| (a[j] + kappa * a[k - 2 - j]) / denom)
            .collect();
        a = prev;
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub length: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl SimConfig {
    /// Burn-in defaults to the MA truncation length, `max(1000, length)`.
    pub fn new(length: usize, seed: u64) -> Self {
        Self {
            length,
            burn_in: truncation(length),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < MIN_LENGTH {
            return Err(Error::config(format!(
                "series length {} is below the minimum of {MIN_LENGTH}",
                self.length
            )));
        }
        Ok(())
    }
}

/// Number of MA(∞) terms kept for a series of `length` observations.
pub fn truncation(length: usize) -> usize {
    MIN_TRUNCATION.max(length)
}

/// Coefficients ψ_0..ψ_M of `(1 − L)^(−d)`.
pub fn frac_coeffs(d: f64, m: usize) -> Result<Vec<f64>> {
    if !(d.is_finite() && d.abs() < 0.5) {
        return Err(Error::config(format!(
            "fractional order d = {d} is outside (-0.5, 0.5)"
        )));
    }
    if m == 0 {
        return Err(Error::config(
            "at least one expansion coefficient is required",
        ));
    }
    Ok(psi_recursion(d, m))
}

fn psi_recursion(d: f64, m: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(m + 1);
    psi.push(1.0);
    for j in 1..=m {
        let jf = j as f64;
        psi.push(psi[j - 1] * (jf - 1.0 + d) / jf);
    }
    psi
}

pub fn simulate(spec: &ArfimaSpec, cfg: &SimConfig) -> Result<ReturnSeries> {
    spec.validate()?;
    cfg.validate()?;
    let m = truncation(cfg.length);
    let total = cfg.burn_in + cfg.length;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let eps: Vec<f64> = (0..m + total)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            spec.innovation_sd * e
        })
        .collect::<Vec<f64>>();

    let mut x = if spec.d == 0.0 {
        eps[m..].to_vec()
    } else {
        let mut rev = psi_recursion(spec.d, m);
        rev.reverse();
        (0..total).map(|t| dot(&rev, &eps[t..t + m + 1])).collect()
    };

    let phi = spec.dense_ar();
    if !phi.is_empty() {
        for t in 0..total {
            let mut acc = x[t];
            for (i, c) in phi.iter().enumerate() {
                if *c != 0.0 && t > i {
                    acc += c * x[t - i - 1];
                }
            }
            x[t] = acc;
        }
    }

    x.drain(..cfg.burn_in);
    debug_assert!(x.iter().all(|v| v.is_finite()));
    Ok(ReturnSeries::from_vec(x))
}

/// I.i.d. standard Gaussian series; identical to `simulate` with d = 0 and no AR terms.
pub fn simulate_gaussian(length: usize, seed: u64) -> Result<ReturnSeries> {
    simulate(&ArfimaSpec::default(), &SimConfig::new(length, seed))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
