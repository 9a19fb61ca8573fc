//! Long-range dependence testing for return series.
//!
//! The crate is organised around the pipeline used to test a price index for
//! long memory:
//!
//! * [`series`]: prices, log returns, time-scale aggregation, moments and
//!   shuffled surrogates.
//! * [`arfima`]: ARFIMA(p, d, 0) simulation with sparse AR structure.
//! * [`rra`]: rescaled range statistics and Hurst exponent estimation,
//!   including the split-scale spline fit.
//! * [`prefilter`]: correlogram, PACF lag selection and sparse AR filtering.
//! * [`mc`]: seeded, parallel Monte Carlo critical values, bias studies,
//!   power curves and test verdicts.

pub mod arfima;
pub mod error;
pub mod io;
pub mod mc;
mod ols;
pub mod prefilter;
pub mod rra;
pub mod series;

pub use error::{Error, Result};
