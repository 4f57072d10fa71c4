//! Design matrices for the meta-regression mean functions.

use super::{KnotRule, MetaError, ModelFamily};
use crate::linalg::Mat;

/// Candidate powers for fractional polynomials; the power 0 stands for the
/// natural logarithm.
pub const FP_POWER_SET: [f64; 8] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0];

/// Mean-function description resolved against concrete data, kept on the
/// fit so predictions can rebuild basis rows.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedDesign {
    Intercept,
    Linear,
    Rcs { knots: Vec<f64> },
    Fp2 { powers: (f64, f64) },
    ExpDecay,
}

impl ResolvedDesign {
    pub fn coefficient_names(&self) -> Vec<String> {
        match self {
            ResolvedDesign::Intercept => vec!["intercept".into()],
            ResolvedDesign::Linear => vec!["intercept".into(), "tau".into()],
            ResolvedDesign::Rcs { knots } => {
                let mut names = vec!["intercept".into(), "tau".into()];
                for i in 0..knots.len().saturating_sub(2) {
                    names.push(format!("rcs{}", i + 1));
                }
                names
            }
            ResolvedDesign::Fp2 { powers } => vec![
                "intercept".into(),
                format!("tau^{}", powers.0),
                if powers.0 == powers.1 {
                    format!("tau^{}*log", powers.1)
                } else {
                    format!("tau^{}", powers.1)
                },
            ],
            ResolvedDesign::ExpDecay => vec!["theta".into(), "beta".into(), "r0".into()],
        }
    }
}

pub fn fp_term(tau: f64, power: f64) -> f64 {
    if power == 0.0 {
        tau.ln()
    } else {
        tau.powf(power)
    }
}

/// Row of basis values at one truncation time.
pub fn design_row(design: &ResolvedDesign, tau: f64) -> Vec<f64> {
    match design {
        ResolvedDesign::Intercept => vec![1.0],
        ResolvedDesign::Linear => vec![1.0, tau],
        ResolvedDesign::Rcs { knots } => {
            let mut row = vec![1.0, tau];
            row.extend(rcs_basis(knots, tau));
            row
        }
        ResolvedDesign::Fp2 { powers: (p1, p2) } => {
            if p1 == p2 {
                let base = fp_term(tau, *p1);
                vec![1.0, base, base * tau.ln()]
            } else {
                vec![1.0, fp_term(tau, *p1), fp_term(tau, *p2)]
            }
        }
        ResolvedDesign::ExpDecay => vec![1.0],
    }
}

/// Restricted cubic spline basis in the truncated-power form, scaled by the
/// squared knot range for conditioning. The resulting curve is linear beyond
/// the boundary knots.
fn rcs_basis(knots: &[f64], x: f64) -> Vec<f64> {
    let m = knots.len();
    let last = knots[m - 1];
    let second_last = knots[m - 2];
    let range2 = (last - knots[0]) * (last - knots[0]);
    let cube_plus = |v: f64| {
        let p = v.max(0.0);
        p * p * p
    };
    (0..m - 2)
        .map(|j| {
            let kj = knots[j];
            let term = cube_plus(x - kj)
                - cube_plus(x - second_last) * (last - kj) / (last - second_last)
                + cube_plus(x - last) * (second_last - kj) / (last - second_last);
            term / range2
        })
        .collect()
}

/// Type-7 (linear interpolation) quantile of a sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Automatic knot placement: four knots at the (0.05, 0.35, 0.65, 0.95)
/// quantiles of tau when at least 30 studies are available, otherwise three
/// knots at (0.10, 0.50, 0.90).
fn auto_knots(taus: &[f64]) -> Result<Vec<f64>, MetaError> {
    if taus.len() < 3 {
        return Err(MetaError::InsufficientStudies { needed: 3, got: taus.len() });
    }
    let mut sorted = taus.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let probs: &[f64] = if taus.len() >= 30 {
        &[0.05, 0.35, 0.65, 0.95]
    } else {
        &[0.10, 0.50, 0.90]
    };
    let knots: Vec<f64> = probs.iter().map(|&p| quantile_sorted(&sorted, p)).collect();
    validate_knots(&knots)?;
    Ok(knots)
}

fn validate_knots(knots: &[f64]) -> Result<(), MetaError> {
    if knots.len() < 3 {
        return Err(MetaError::InvalidKnots(format!("need at least 3 knots, got {}", knots.len())));
    }
    for w in knots.windows(2) {
        if !(w[0] < w[1]) {
            return Err(MetaError::InvalidKnots(format!(
                "knots must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Build the design matrix for a mean-function family on the given
/// truncation times, resolving automatic knots where needed.
pub fn design_matrix(
    family: ModelFamily,
    knots: &KnotRule,
    powers: (f64, f64),
    taus: &[f64],
) -> Result<(Mat, ResolvedDesign), MetaError> {
    if taus.is_empty() {
        return Err(MetaError::InsufficientStudies { needed: 1, got: 0 });
    }
    let resolved = match family {
        ModelFamily::MetaAnalysis => ResolvedDesign::Intercept,
        ModelFamily::Linear => ResolvedDesign::Linear,
        ModelFamily::Rcs => {
            let knots = match knots {
                KnotRule::Auto => auto_knots(taus)?,
                KnotRule::Explicit(k) => {
                    validate_knots(k)?;
                    k.clone()
                }
            };
            ResolvedDesign::Rcs { knots }
        }
        ModelFamily::Fp2 => {
            for p in [powers.0, powers.1] {
                if !FP_POWER_SET.contains(&p) {
                    return Err(MetaError::InvalidPowers(p));
                }
            }
            ResolvedDesign::Fp2 { powers }
        }
        ModelFamily::ExpDecay => ResolvedDesign::ExpDecay,
    };
    let rows: Vec<Vec<f64>> = taus.iter().map(|&t| design_row(&resolved, t)).collect();
    Ok((Mat::from_rows(rows), resolved))
}
