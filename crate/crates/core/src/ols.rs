//! Least-squares helpers shared by the estimators and the AR filter.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative pivot size below which a design matrix is treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Intercept and slope of `y` on `x`.
pub(crate) fn simple(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        sxx += dx * dx;
        sxy += dx * (yi - my);
    }
    if sxx <= 0.0 {
        return Err(Error::degenerate("regressor has no variation"));
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

/// Least-squares coefficients via thin QR. `design` is row-major, one row per
/// observation.
pub(crate) fn lstsq(design: DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (rows, cols) = design.shape();
    if rows < cols {
        return Err(Error::degenerate(format!(
            "{rows} observations cannot identify {cols} coefficients"
        )));
    }
    let scale = design
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max);
    let qr = design.qr();
    let r = qr.r();
    if (0..cols).any(|i| r[(i, i)].abs() <= RANK_TOL * scale) {
        return Err(Error::degenerate("singular regression design"));
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::degenerate("singular regression design"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn simple_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 + 2.0 * v).collect();
        let (a, b) = simple(&x, &y).unwrap();
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn lstsq_matches_simple() {
        let x = [0.3, 1.1, 2.0, 2.2, 5.0];
        let y = [1.0, 0.2, 3.0, 2.5, 4.1];
        let design = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
        let beta = lstsq(design, &DVector::from_column_slice(&y)).unwrap();
        let (a, b) = simple(&x, &y).unwrap();
        assert_abs_diff_eq!(beta[0], a, epsilon = 1e-12);
        assert_abs_diff_eq!(beta[1], b, epsilon = 1e-12);
    }

    #[test]
    fn lstsq_rejects_collinear_columns() {
        let design = DMatrix::from_fn(6, 2, |_, _| 1.0);
        let y = DVector::from_element(6, 1.0);
        assert!(lstsq(design, &y).is_err());
    }
}
