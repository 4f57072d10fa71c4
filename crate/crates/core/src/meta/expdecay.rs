//! Exponential decay meta-regression, fitted by alternating Gauss-Newton
//! updates of the fixed effects with REML updates of the between-study
//! variance on the working linear model.
//!
//! The model on the transformed scale is
//! `y_k = θ + a_k + (R0 - (θ + a_k)) · exp(-exp(β) τ_k) + ε_k`,
//! so the random effect enters with loading `1 - exp(-exp(β) τ_k)` and the
//! asymptote θ plays the role of the unrestricted concordance level.
//! Non-convergence is a routine outcome for flat or short-follow-up data
//! and is reported as a failed status rather than an error.

use super::reml::{hartung_knapp_scale, profile_reml, wls};
use crate::linalg::Mat;

const MAX_OUTER: usize = 100;
const REL_TOL: f64 = 1e-8;
const BETA_CAP: f64 = 30.0;
const MIN_STEP: f64 = 1e-10;

pub(super) struct DecayFit {
    pub theta: f64,
    pub beta: f64,
    pub r0: f64,
    pub sigma_a2: f64,
    /// Hartung-Knapp scaled covariance of (θ, β, R0).
    pub cov: Mat,
    pub residuals: Vec<f64>,
}

struct ModelParts {
    mu: Vec<f64>,
    jacobian: Mat,
    loadings: Vec<f64>,
}

fn model_parts(phi: &[f64; 3], taus: &[f64]) -> Option<ModelParts> {
    let [theta, beta, r0] = *phi;
    if !theta.is_finite() || !beta.is_finite() || !r0.is_finite() || beta.abs() > BETA_CAP {
        return None;
    }
    let rate = beta.exp();
    let mut mu = Vec::with_capacity(taus.len());
    let mut rows = Vec::with_capacity(taus.len());
    let mut loadings = Vec::with_capacity(taus.len());
    for &tau in taus {
        let u = (-rate * tau).exp();
        let m = theta + (r0 - theta) * u;
        if !m.is_finite() {
            return None;
        }
        mu.push(m);
        rows.push(vec![1.0 - u, -(r0 - theta) * tau * rate * u, u]);
        loadings.push(1.0 - u);
    }
    Some(ModelParts { mu, jacobian: Mat::from_rows(rows), loadings })
}

fn weighted_ssr(y: &[f64], mu: &[f64], weights: &[f64]) -> f64 {
    y.iter()
        .zip(mu)
        .zip(weights)
        .map(|((y, m), w)| (y - m) * (y - m) * w)
        .sum()
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fit the decay model. Returns a human-readable reason on failure; the
/// caller converts it into a failed status.
pub(super) fn fit_decay(
    y: &[f64],
    s2: &[f64],
    taus: &[f64],
    hk_floor: bool,
) -> Result<DecayFit, String> {
    let min_y = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_y = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut phi = [min_y, -median(taus).ln(), max_y];
    if !phi[1].is_finite() {
        return Err("invalid starting rate".into());
    }
    let mut sigma_a2 = 0.0;

    let mut converged = false;
    for _ in 0..MAX_OUTER {
        let parts = model_parts(&phi, taus).ok_or("parameters left the feasible region")?;
        let weights: Vec<f64> = s2
            .iter()
            .zip(&parts.loadings)
            .map(|(s, z)| 1.0 / (s + sigma_a2 * z * z))
            .collect();
        let residuals: Vec<f64> = y.iter().zip(&parts.mu).map(|(y, m)| y - m).collect();
        let ssr = weighted_ssr(y, &parts.mu, &weights);

        let gn = wls(&parts.jacobian, &residuals, &weights)
            .map_err(|_| "singular working model".to_string())?;
        let delta = gn.gamma;

        // Backtracking line search on the weighted residual sum of squares.
        let mut lambda = 1.0;
        let mut accepted: Option<[f64; 3]> = None;
        while lambda >= MIN_STEP {
            let cand = [
                phi[0] + lambda * delta[0],
                phi[1] + lambda * delta[1],
                phi[2] + lambda * delta[2],
            ];
            if let Some(p) = model_parts(&cand, taus) {
                if weighted_ssr(y, &p.mu, &weights) <= ssr * (1.0 + 1e-12) {
                    accepted = Some(cand);
                    break;
                }
            }
            lambda *= 0.5;
        }
        let step_norm = delta.iter().map(|d| d.abs()).fold(0.0, f64::max);
        let new_phi = match accepted {
            Some(p) => p,
            None if step_norm < REL_TOL => phi,
            None => return Err("line search failed to reduce the objective".into()),
        };

        let new_parts = model_parts(&new_phi, taus).ok_or("parameters left the feasible region")?;
        let new_residuals: Vec<f64> = y.iter().zip(&new_parts.mu).map(|(y, m)| y - m).collect();
        let new_sigma = profile_reml(&new_parts.jacobian, &new_residuals, s2, &new_parts.loadings)
            .map_err(|e| format!("variance update failed: {e}"))?;

        let rel = |new: f64, old: f64| (new - old).abs() / (old.abs() + 1e-8);
        let change = rel(new_phi[0], phi[0])
            .max(rel(new_phi[1], phi[1]))
            .max(rel(new_phi[2], phi[2]))
            .max(rel(new_sigma, sigma_a2));
        phi = new_phi;
        sigma_a2 = new_sigma;
        if change < REL_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(format!("no convergence in {MAX_OUTER} iterations"));
    }

    let parts = model_parts(&phi, taus).ok_or("parameters left the feasible region")?;
    let weights: Vec<f64> = s2
        .iter()
        .zip(&parts.loadings)
        .map(|(s, z)| 1.0 / (s + sigma_a2 * z * z))
        .collect();
    let residuals: Vec<f64> = y.iter().zip(&parts.mu).map(|(y, m)| y - m).collect();
    let base = wls(&parts.jacobian, &residuals, &weights)
        .map_err(|_| "singular covariance at the solution".to_string())?;
    let scale = hartung_knapp_scale(&residuals, &weights, 3, hk_floor);
    let mut cov = base.cov_unscaled;
    cov = cov.scaled(scale);
    if (0..3).any(|i| !cov.at(i, i).is_finite()) {
        return Err("non-finite covariance at the solution".into());
    }

    Ok(DecayFit {
        theta: phi[0],
        beta: phi[1],
        r0: phi[2],
        sigma_a2,
        cov,
        residuals,
    })
}

/// Decay mean and its parameter gradient at one truncation time.
pub(super) fn decay_mean_gradient(theta: f64, beta: f64, r0: f64, tau: f64) -> (f64, Vec<f64>) {
    let rate = beta.exp();
    let u = (-rate * tau).exp();
    let mu = theta + (r0 - theta) * u;
    (mu, vec![1.0 - u, -(r0 - theta) * tau * rate * u, u])
}
