//! Restricted maximum likelihood machinery: weighted least squares, the
//! one-dimensional REML profile in the between-study variance, and the
//! Hartung-Knapp covariance adjustment.

use super::MetaError;
use crate::linalg::{self, Mat};

/// Weighted least squares solution with the pieces the callers need.
pub(super) struct WlsFit {
    pub gamma: Vec<f64>,
    /// `(X' W X)^{-1}` before any Hartung-Knapp scaling.
    pub cov_unscaled: Mat,
    pub residuals: Vec<f64>,
    pub log_det_xtwx: f64,
}

pub(super) fn wls(x: &Mat, y: &[f64], weights: &[f64]) -> Result<WlsFit, MetaError> {
    let (k, p) = (x.rows(), x.cols());
    debug_assert_eq!(y.len(), k);
    debug_assert_eq!(weights.len(), k);

    let mut xtwx = Mat::zeros(p, p);
    let mut xtwy = vec![0.0; p];
    for i in 0..k {
        let row = x.row(i);
        let w = weights[i];
        for a in 0..p {
            xtwy[a] += w * row[a] * y[i];
            for b in a..p {
                let v = xtwx.at(a, b) + w * row[a] * row[b];
                xtwx.set(a, b, v);
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtwx.set(a, b, xtwx.at(b, a));
        }
    }

    let (gamma, log_det) = linalg::solve(&xtwx, &xtwy).map_err(|_| MetaError::DegenerateDesign)?;
    let cov_unscaled = linalg::invert(&xtwx).map_err(|_| MetaError::DegenerateDesign)?;
    let residuals = (0..k).map(|i| y[i] - linalg::dot(x.row(i), &gamma)).collect();
    Ok(WlsFit { gamma, cov_unscaled, residuals, log_det_xtwx: log_det })
}

/// Restricted log-likelihood (up to an additive constant) of the model
/// `y = X γ + a·z + ε` with `Var(ε_k) = s2_k` known, `Var(a_k) = sigma_a2`,
/// profiled over γ.
///
/// The loadings `z` are 1 for the linear meta-regression models; the
/// exponential decay model enters its random effect with loading
/// `1 - exp(-exp(β) τ_k)`.
pub fn restricted_loglik(
    x: &Mat,
    y: &[f64],
    s2: &[f64],
    loadings: &[f64],
    sigma_a2: f64,
) -> Result<f64, MetaError> {
    let k = y.len();
    let mut weights = Vec::with_capacity(k);
    let mut log_v_sum = 0.0;
    for i in 0..k {
        let v = s2[i] + sigma_a2 * loadings[i] * loadings[i];
        if !(v > 0.0) {
            return Err(MetaError::NonConvergence("non-positive marginal variance".into()));
        }
        log_v_sum += v.ln();
        weights.push(1.0 / v);
    }
    let fit = wls(x, y, &weights)?;
    let rss: f64 = fit
        .residuals
        .iter()
        .zip(&weights)
        .map(|(r, w)| r * r * w)
        .sum();
    Ok(-0.5 * (log_v_sum + fit.log_det_xtwx + rss))
}

const PROFILE_GRID: usize = 33;
const PROFILE_MAX_ITER: usize = 200;
const PROFILE_REL_TOL: f64 = 1e-10;
/// Estimates below this are reported as exactly zero.
const BOUNDARY_SNAP: f64 = 1e-12;

/// Maximize the restricted log-likelihood over `sigma_a2 >= 0` by a grid
/// scan followed by golden-section refinement on the bracketing interval.
/// The search bracket is `[0, 10 * Var(y)]`.
pub(super) fn profile_reml(
    x: &Mat,
    y: &[f64],
    s2: &[f64],
    loadings: &[f64],
) -> Result<f64, MetaError> {
    let k = y.len() as f64;
    let mean = y.iter().sum::<f64>() / k;
    let var_y = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0).max(1.0);
    let upper = 10.0 * var_y;
    if !(upper > 0.0) {
        return Ok(0.0);
    }

    let objective = |sigma_a2: f64| restricted_loglik(x, y, s2, loadings, sigma_a2);

    // Quadratically spaced grid, denser near zero where the optimum
    // typically sits.
    let mut best_idx = 0;
    let mut best_val = f64::NEG_INFINITY;
    let mut grid = Vec::with_capacity(PROFILE_GRID);
    for i in 0..PROFILE_GRID {
        let frac = i as f64 / (PROFILE_GRID - 1) as f64;
        grid.push(upper * frac * frac);
    }
    for (i, &g) in grid.iter().enumerate() {
        let val = objective(g)?;
        if val.is_nan() {
            return Err(MetaError::NonConvergence("REML objective is NaN".into()));
        }
        if val > best_val {
            best_val = val;
            best_idx = i;
        }
    }

    let mut lo = if best_idx == 0 { 0.0 } else { grid[best_idx - 1] };
    let mut hi = if best_idx + 1 < grid.len() { grid[best_idx + 1] } else { grid[best_idx] };
    if hi <= lo {
        return Ok(finish(grid[best_idx]));
    }

    // Golden-section search for the maximum on [lo, hi].
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = objective(a)?;
    let mut fb = objective(b)?;
    let tol = PROFILE_REL_TOL * upper;
    for _ in 0..PROFILE_MAX_ITER {
        if (hi - lo) < tol {
            break;
        }
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = objective(b)?;
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = objective(a)?;
        }
    }
    Ok(finish(0.5 * (lo + hi)))
}

fn finish(sigma_a2: f64) -> f64 {
    if sigma_a2 < BOUNDARY_SNAP {
        0.0
    } else {
        sigma_a2
    }
}

/// Hartung-Knapp scale factor: the weighted residual mean square over the
/// residual degrees of freedom, optionally floored at 1.
pub(super) fn hartung_knapp_scale(
    residuals: &[f64],
    weights: &[f64],
    p: usize,
    floor: bool,
) -> f64 {
    let k = residuals.len();
    debug_assert!(k > p);
    let q: f64 = residuals.iter().zip(weights).map(|(r, w)| r * r * w).sum();
    let scale = q / (k - p) as f64;
    if floor {
        scale.max(1.0)
    } else {
        scale
    }
}
