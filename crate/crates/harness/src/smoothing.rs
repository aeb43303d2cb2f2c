//! Savitzky-Golay smoothing: per-point least-squares polynomial fit over a
//! sliding window, evaluated at the window center. Near the edges the
//! window truncates and the fit runs on whatever points remain, so the
//! series keeps its length and the ends are genuine fits rather than
//! padded copies.

use anyhow::{bail, Result};

/// Fits a degree-`degree` polynomial to (t, y) by normal equations and
/// returns its value at t = 0. The windows here are at most a handful of
/// points, so the direct solve is both adequate and exact enough.
fn polyfit_at_zero(ts: &[f64], ys: &[f64], degree: usize) -> f64 {
    let m = degree + 1;
    // normal matrix A[r][c] = sum t^(r+c), rhs b[r] = sum y t^r
    let mut a = vec![vec![0.0f64; m]; m];
    let mut b = vec![0.0f64; m];
    for (&t, &y) in ts.iter().zip(ys) {
        let mut powers = vec![1.0f64; 2 * m - 1];
        for p in 1..2 * m - 1 {
            powers[p] = powers[p - 1] * t;
        }
        for r in 0..m {
            for c in 0..m {
                a[r][c] += powers[r + c];
            }
            b[r] += y * powers[r];
        }
    }
    // Gaussian elimination with partial pivoting
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        for row in col + 1..m {
            let factor = a[row][col] / diag;
            for c in col..m {
                a[row][c] -= factor * a[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..m).rev() {
        for c in col + 1..m {
            b[col] -= a[col][c] * b[c];
        }
        b[col] /= a[col][col];
    }
    // constant coefficient is the value at t = 0
    b[0]
}

/// Smooths a series in place-order, window centered on each index and
/// truncated at the boundaries.
pub fn savgol_smooth(series: &[f64], window: usize, degree: usize) -> Result<Vec<f64>> {
    if window % 2 == 0 {
        bail!("window must be odd, got {window}");
    }
    if window <= degree {
        bail!("window {window} must exceed degree {degree}");
    }
    if series.len() < window {
        bail!(
            "series of {} points is shorter than the window {window}",
            series.len()
        );
    }
    let half = window / 2;
    let n = series.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        let ts: Vec<f64> = (lo..=hi).map(|t| t as f64 - i as f64).collect();
        out.push(polyfit_at_zero(&ts, &series[lo..=hi], degree));
    }
    Ok(out)
}

/// Smoothed copy of the series, passing a series shorter than the window
/// through unchanged.
pub fn smoothed_series(series: &[f64], window: usize, degree: usize) -> Vec<f64> {
    if series.len() >= window {
        savgol_smooth(series, window, degree).expect("valid window parameters")
    } else {
        series.to_vec()
    }
}

/// Last value of the smoothed series, falling back to the raw last value
/// when the series is shorter than the window.
pub fn smoothed_last(series: &[f64], window: usize, degree: usize) -> f64 {
    *smoothed_series(series, window, degree)
        .last()
        .expect("non-empty series")
}
