//! Scale transformations applied to concordance estimates before
//! meta-analysis, with delta-method variance propagation.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("DomainViolation: {transform} is undefined at {value}")]
    DomainViolation { transform: &'static str, value: f64 },
    #[error("UnknownTransform: {0:?} (expected id, logit, or asin)")]
    Unknown(String),
}

/// Transformation of the probability scale used for model fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transform {
    Identity,
    #[default]
    Logit,
    ArcsineSqrt,
}

impl Transform {
    /// Short label used in CLI flags and report tables.
    pub fn label(self) -> &'static str {
        match self {
            Transform::Identity => "id",
            Transform::Logit => "logit",
            Transform::ArcsineSqrt => "asin",
        }
    }

    pub fn parse(s: &str) -> Result<Self, TransformError> {
        match s {
            "id" => Ok(Transform::Identity),
            "logit" => Ok(Transform::Logit),
            "asin" => Ok(Transform::ArcsineSqrt),
            other => Err(TransformError::Unknown(other.to_string())),
        }
    }
}

/// Forward transformation `g(c)`.
///
/// Logit requires `c` strictly inside (0, 1); arcsine square root accepts
/// the closed unit interval.
pub fn apply(tag: Transform, c: f64) -> Result<f64, TransformError> {
    match tag {
        Transform::Identity => {
            if !(0.0..=1.0).contains(&c) {
                return Err(TransformError::DomainViolation { transform: "id", value: c });
            }
            Ok(c)
        }
        Transform::Logit => {
            if !(c > 0.0 && c < 1.0) {
                return Err(TransformError::DomainViolation { transform: "logit", value: c });
            }
            Ok((c / (1.0 - c)).ln())
        }
        Transform::ArcsineSqrt => {
            if !(0.0..=1.0).contains(&c) {
                return Err(TransformError::DomainViolation { transform: "asin", value: c });
            }
            Ok(c.sqrt().asin())
        }
    }
}

/// Exact inverse of [`apply`], mapping back to the unit interval.
pub fn invert(tag: Transform, y: f64) -> Result<f64, TransformError> {
    match tag {
        Transform::Identity => {
            if !(0.0..=1.0).contains(&y) {
                return Err(TransformError::DomainViolation { transform: "id", value: y });
            }
            Ok(y)
        }
        Transform::Logit => {
            if y.is_nan() {
                return Err(TransformError::DomainViolation { transform: "logit", value: y });
            }
            Ok(sigmoid(y))
        }
        Transform::ArcsineSqrt => {
            if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&y) {
                return Err(TransformError::DomainViolation { transform: "asin", value: y });
            }
            let s = y.sin();
            Ok(s * s)
        }
    }
}

/// Inverse transformation with out-of-range inputs saturated to the nearest
/// boundary of the invertible domain.
///
/// Fitted values from a linear model on the transformed scale can stray
/// outside that domain (for the identity and arcsine scales); predictions
/// still have to map to a probability.
pub fn invert_saturating(tag: Transform, y: f64) -> f64 {
    match tag {
        Transform::Identity => y.clamp(0.0, 1.0),
        Transform::Logit => sigmoid(y),
        Transform::ArcsineSqrt => {
            let s = y.clamp(0.0, std::f64::consts::FRAC_PI_2).sin();
            s * s
        }
    }
}

/// Delta-method variance on the transformed scale: `var * g'(c)^2`.
pub fn transform_variance(tag: Transform, c: f64, var: f64) -> Result<f64, TransformError> {
    if var < 0.0 || var.is_nan() {
        return Err(TransformError::DomainViolation { transform: "variance", value: var });
    }
    match tag {
        Transform::Identity => Ok(var),
        Transform::Logit => {
            if !(c > 0.0 && c < 1.0) {
                return Err(TransformError::DomainViolation { transform: "logit", value: c });
            }
            let d = c * (1.0 - c);
            Ok(var / (d * d))
        }
        Transform::ArcsineSqrt => {
            if !(c > 0.0 && c < 1.0) {
                return Err(TransformError::DomainViolation { transform: "asin", value: c });
            }
            Ok(var / (4.0 * c * (1.0 - c)))
        }
    }
}

fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

/// Pull an estimate at or beyond the unit-interval boundary into the open
/// interval, so that the logit and arcsine scales stay usable.
///
/// The margin is `1/(2n)` when the study size is known and `1e-6`
/// otherwise. The boolean reports whether clamping actually happened.
pub fn clamp_unit(c: f64, n: Option<u64>) -> (f64, bool) {
    let eps = match n {
        Some(n) if n > 0 => 1.0 / (2.0 * n as f64),
        _ => 1e-6,
    };
    if c <= eps {
        (eps, true)
    } else if c >= 1.0 - eps {
        (1.0 - eps, true)
    } else {
        (c, false)
    }
}

pub const ALL_TRANSFORMS: [Transform; 3] = [Transform::Identity, Transform::Logit, Transform::ArcsineSqrt];
