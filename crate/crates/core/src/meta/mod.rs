//! Random-effects meta-analysis and time-aware meta-regression of
//! study-level concordance estimates.
//!
//! Study summaries `(τ_k, Ĉ_k, σ̂_k²)` are mapped to a transformed scale,
//! fitted by REML with inverse-variance weights `1/(σ̂_k² + σ̂_a²)`, and
//! reported with Hartung-Knapp adjusted coefficient covariances. The mean
//! function is constant (classical meta-analysis), linear, a restricted
//! cubic spline, a fractional polynomial of degree 2, or an exponential
//! decay curve.

mod design;
mod expdecay;
mod reml;

pub use design::{design_matrix, design_row, ResolvedDesign, FP_POWER_SET};
pub use reml::restricted_loglik;

use crate::linalg::Mat;
use crate::transforms::{self, Transform, TransformError};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetaError {
    #[error("DegenerateDesign: design matrix is rank deficient")]
    DegenerateDesign,
    #[error("NonConvergence: {0}")]
    NonConvergence(String),
    #[error("InsufficientStudies: need at least {needed} studies, got {got}")]
    InsufficientStudies { needed: usize, got: usize },
    #[error("InvalidPowers: {0} is not in the fractional-polynomial power set")]
    InvalidPowers(f64),
    #[error("InvalidKnots: {0}")]
    InvalidKnots(String),
    #[error("InvalidStudy: {0}")]
    InvalidStudy(String),
    #[error("NotConverged: {0}")]
    NotConverged(String),
    #[error("MissingSampleSize: study {0} has no sample size, needed for weighted RMSE")]
    MissingSampleSize(String),
    #[error("UnknownModel: {0:?}")]
    UnknownModel(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// One study-level summary row, on the probability scale.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySummary {
    pub study_id: String,
    pub tau: f64,
    pub c_hat: f64,
    pub var_hat: f64,
    pub n: Option<u64>,
}

impl StudySummary {
    pub fn new(
        study_id: impl Into<String>,
        tau: f64,
        c_hat: f64,
        var_hat: f64,
        n: Option<u64>,
    ) -> Result<Self, MetaError> {
        let study_id = study_id.into();
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(MetaError::InvalidStudy(format!("{study_id}: tau {tau} must be positive and finite")));
        }
        if !(0.0..=1.0).contains(&c_hat) {
            return Err(MetaError::InvalidStudy(format!("{study_id}: c_hat {c_hat} outside [0, 1]")));
        }
        if !(var_hat > 0.0) || !var_hat.is_finite() {
            return Err(MetaError::InvalidStudy(format!("{study_id}: var_hat {var_hat} must be positive and finite")));
        }
        Ok(StudySummary { study_id, tau, c_hat, var_hat, n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    MetaAnalysis,
    Linear,
    Rcs,
    Fp2,
    ExpDecay,
}

impl ModelFamily {
    pub fn label(self) -> &'static str {
        match self {
            ModelFamily::MetaAnalysis => "ma",
            ModelFamily::Linear => "linear",
            ModelFamily::Rcs => "rcs",
            ModelFamily::Fp2 => "fp2",
            ModelFamily::ExpDecay => "expdecay",
        }
    }

    pub fn parse(s: &str) -> Result<Self, MetaError> {
        match s {
            "ma" => Ok(ModelFamily::MetaAnalysis),
            "linear" => Ok(ModelFamily::Linear),
            "rcs" => Ok(ModelFamily::Rcs),
            "fp2" => Ok(ModelFamily::Fp2),
            "expdecay" => Ok(ModelFamily::ExpDecay),
            other => Err(MetaError::UnknownModel(other.to_string())),
        }
    }
}

/// Which studies enter the fit, by truncation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubsetRule {
    #[default]
    All,
    /// The half of the studies with the largest truncation times.
    Last50,
    /// The 30% of the studies with the largest truncation times.
    Last30,
}

impl SubsetRule {
    pub fn label(self) -> &'static str {
        match self {
            SubsetRule::All => "all",
            SubsetRule::Last50 => "last50",
            SubsetRule::Last30 => "last30",
        }
    }

    pub fn parse(s: &str) -> Result<Self, MetaError> {
        match s {
            "all" => Ok(SubsetRule::All),
            "last50" => Ok(SubsetRule::Last50),
            "last30" => Ok(SubsetRule::Last30),
            other => Err(MetaError::UnknownModel(format!("subset {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum KnotRule {
    #[default]
    Auto,
    Explicit(Vec<f64>),
}

/// Full specification of one meta-analytic model.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaModelSpec {
    pub transform: Transform,
    pub family: ModelFamily,
    pub subset: SubsetRule,
    pub rcs_knots: KnotRule,
    pub fp_powers: (f64, f64),
    /// Floor the Hartung-Knapp scale at 1 (off by default).
    pub hk_floor: bool,
}

impl MetaModelSpec {
    pub fn new(family: ModelFamily, transform: Transform) -> Self {
        MetaModelSpec {
            transform,
            family,
            subset: SubsetRule::All,
            rcs_knots: KnotRule::Auto,
            fp_powers: (-0.5, 0.5),
            hk_floor: false,
        }
    }

    pub fn with_subset(mut self, subset: SubsetRule) -> Self {
        self.subset = subset;
        self
    }

    pub fn with_fp_powers(mut self, powers: (f64, f64)) -> Self {
        self.fp_powers = powers;
        self
    }

    pub fn with_knots(mut self, knots: KnotRule) -> Self {
        self.rcs_knots = knots;
        self
    }

    /// Short label like `fp2(logit)` or `ma(id,last30)`.
    pub fn label(&self) -> String {
        match self.subset {
            SubsetRule::All => format!("{}({})", self.family.label(), self.transform.label()),
            s => format!("{}({},{})", self.family.label(), self.transform.label(), s.label()),
        }
    }

    /// Parse a label of the form `family(transform)` or
    /// `family(transform,subset)`.
    pub fn parse_label(label: &str) -> Result<Self, MetaError> {
        let label = label.trim();
        let open = label.find('(').ok_or_else(|| MetaError::UnknownModel(label.to_string()))?;
        if !label.ends_with(')') {
            return Err(MetaError::UnknownModel(label.to_string()));
        }
        let family = ModelFamily::parse(&label[..open])?;
        let inner = &label[open + 1..label.len() - 1];
        let mut parts = inner.split(',').map(str::trim);
        let transform = Transform::parse(parts.next().unwrap_or(""))?;
        let spec = MetaModelSpec::new(family, transform);
        match parts.next() {
            None => Ok(spec),
            Some(subset) => {
                let spec = spec.with_subset(SubsetRule::parse(subset)?);
                if parts.next().is_some() {
                    return Err(MetaError::UnknownModel(label.to_string()));
                }
                Ok(spec)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitStatus {
    Ok,
    Warning(String),
    Failed(String),
}

impl FitStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, FitStatus::Ok)
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, FitStatus::Failed(_))
    }
}

/// Fitted meta-analytic model on the transformed scale.
#[derive(Debug, Clone)]
pub struct MetaFit {
    pub spec: MetaModelSpec,
    pub design: ResolvedDesign,
    /// Coefficients; `[θ, β, R0]` for the decay model, empty on failure.
    pub coefficients: Vec<f64>,
    /// Between-study variance `σ̂_a²` on the transformed scale.
    pub between_study_var: f64,
    /// Hartung-Knapp scaled coefficient covariance.
    pub coef_cov: Mat,
    /// Cochran's residual heterogeneity statistic at `σ_a² = 0`.
    pub q_stat: f64,
    pub q_df: usize,
    pub q_pvalue: f64,
    pub converged: FitStatus,
    /// Studies actually used after subsetting.
    pub k_used: usize,
    /// Studies whose estimate had to be pulled off the unit-interval
    /// boundary before transformation.
    pub clamped: usize,
}

impl MetaFit {
    pub fn sigma_a(&self) -> f64 {
        self.between_study_var.max(0.0).sqrt()
    }

    fn failed(spec: &MetaModelSpec, design: ResolvedDesign, k_used: usize, reason: String) -> MetaFit {
        MetaFit {
            spec: spec.clone(),
            design,
            coefficients: Vec::new(),
            between_study_var: f64::NAN,
            coef_cov: Mat::zeros(0, 0),
            q_stat: f64::NAN,
            q_df: 0,
            q_pvalue: f64::NAN,
            converged: FitStatus::Failed(reason),
            k_used,
            clamped: 0,
        }
    }
}

/// Apply a subset rule, keeping the studies with the largest truncation
/// times. `Last50` keeps `ceil(K/2)` studies and `Last30` keeps
/// `ceil(0.3 K)`; ties in τ are broken by study id so the selection is
/// deterministic. The surviving studies keep their input order.
pub fn subset_by_tau(studies: &[StudySummary], rule: SubsetRule) -> Vec<StudySummary> {
    let k = studies.len();
    let keep = match rule {
        SubsetRule::All => return studies.to_vec(),
        SubsetRule::Last50 => k.div_ceil(2),
        SubsetRule::Last30 => (3 * k).div_ceil(10),
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        studies[b]
            .tau
            .partial_cmp(&studies[a].tau)
            .unwrap()
            .then_with(|| studies[a].study_id.cmp(&studies[b].study_id))
    });
    let mut selected = vec![false; k];
    for &i in order.iter().take(keep) {
        selected[i] = true;
    }
    studies
        .iter()
        .zip(&selected)
        .filter(|(_, &s)| s)
        .map(|(st, _)| st.clone())
        .collect()
}

struct TransformedStudies {
    y: Vec<f64>,
    s2: Vec<f64>,
    taus: Vec<f64>,
    clamped: usize,
}

fn transform_studies(studies: &[StudySummary], transform: Transform) -> Result<TransformedStudies, MetaError> {
    let mut out = TransformedStudies {
        y: Vec::with_capacity(studies.len()),
        s2: Vec::with_capacity(studies.len()),
        taus: Vec::with_capacity(studies.len()),
        clamped: 0,
    };
    for st in studies {
        let (c, was_clamped) = match transform {
            Transform::Identity => (st.c_hat, false),
            _ => transforms::clamp_unit(st.c_hat, st.n),
        };
        if was_clamped {
            out.clamped += 1;
        }
        out.y.push(transforms::apply(transform, c)?);
        out.s2.push(transforms::transform_variance(transform, c, st.var_hat)?);
        out.taus.push(st.tau);
    }
    Ok(out)
}

fn t_quantile(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

fn chi2_sf(stat: f64, df: usize) -> f64 {
    if df == 0 || !stat.is_finite() {
        return f64::NAN;
    }
    ChiSquared::new(df as f64).expect("positive degrees of freedom").sf(stat)
}

/// Fit one of the linear-in-coefficients families (constant, linear, RCS,
/// FP2) by REML.
///
/// Requires at least `p + 1` studies after subsetting so that both the REML
/// profile and the heterogeneity test have residual degrees of freedom.
pub fn fit_reml(spec: &MetaModelSpec, studies: &[StudySummary]) -> Result<MetaFit, MetaError> {
    if spec.family == ModelFamily::ExpDecay {
        return fit_exp_decay(spec, studies);
    }
    let used = subset_by_tau(studies, spec.subset);
    let data = transform_studies(&used, spec.transform)?;
    let (x, design) = design_matrix(spec.family, &spec.rcs_knots, spec.fp_powers, &data.taus)?;
    let p = x.cols();
    let k = used.len();
    if k < p + 1 {
        return Err(MetaError::InsufficientStudies { needed: p + 1, got: k });
    }

    let loadings = vec![1.0; k];
    let sigma_a2 = reml::profile_reml(&x, &data.y, &data.s2, &loadings)?;
    let weights: Vec<f64> = data.s2.iter().map(|s| 1.0 / (s + sigma_a2)).collect();
    let fit = reml::wls(&x, &data.y, &weights)?;
    let scale = reml::hartung_knapp_scale(&fit.residuals, &weights, p, spec.hk_floor);
    let coef_cov = fit.cov_unscaled.scaled(scale);

    // Cochran's Q: weighted residual sum of squares of the fixed-effects
    // fit at zero between-study variance.
    let w0: Vec<f64> = data.s2.iter().map(|s| 1.0 / s).collect();
    let fit0 = reml::wls(&x, &data.y, &w0)?;
    let q_stat: f64 = fit0.residuals.iter().zip(&w0).map(|(r, w)| r * r * w).sum();
    let q_df = k - p;
    let q_pvalue = chi2_sf(q_stat, q_df);

    Ok(MetaFit {
        spec: spec.clone(),
        design,
        coefficients: fit.gamma,
        between_study_var: sigma_a2,
        coef_cov,
        q_stat,
        q_df,
        q_pvalue,
        converged: FitStatus::Ok,
        k_used: k,
        clamped: data.clamped,
    })
}

/// Fit the exponential decay model. Convergence failure is an expected
/// analytical outcome and is returned as a `Failed` status inside the fit,
/// never as an error.
pub fn fit_exp_decay(spec: &MetaModelSpec, studies: &[StudySummary]) -> Result<MetaFit, MetaError> {
    let used = subset_by_tau(studies, spec.subset);
    let k = used.len();
    if k < 4 {
        return Err(MetaError::InsufficientStudies { needed: 4, got: k });
    }
    let data = transform_studies(&used, spec.transform)?;

    match expdecay::fit_decay(&data.y, &data.s2, &data.taus, spec.hk_floor) {
        Err(reason) => Ok(MetaFit::failed(spec, ResolvedDesign::ExpDecay, k, reason)),
        Ok(decay) => {
            let q_stat: f64 = decay
                .residuals
                .iter()
                .zip(&data.s2)
                .map(|(r, s)| r * r / s)
                .sum();
            let q_df = k - 3;
            Ok(MetaFit {
                spec: spec.clone(),
                design: ResolvedDesign::ExpDecay,
                coefficients: vec![decay.theta, decay.beta, decay.r0],
                between_study_var: decay.sigma_a2,
                coef_cov: decay.cov,
                q_stat,
                q_df,
                q_pvalue: chi2_sf(q_stat, q_df),
                converged: FitStatus::Ok,
                k_used: k,
                clamped: data.clamped,
            })
        }
    }
}

/// Fit whichever model family the spec selects.
pub fn fit(spec: &MetaModelSpec, studies: &[StudySummary]) -> Result<MetaFit, MetaError> {
    match spec.family {
        ModelFamily::ExpDecay => fit_exp_decay(spec, studies),
        _ => fit_reml(spec, studies),
    }
}

fn mean_and_gradient(fit: &MetaFit, tau: f64) -> (f64, Vec<f64>) {
    match &fit.design {
        ResolvedDesign::ExpDecay => {
            expdecay::decay_mean_gradient(fit.coefficients[0], fit.coefficients[1], fit.coefficients[2], tau)
        }
        d => {
            let row = design_row(d, tau);
            let mean = crate::linalg::dot(&row, &fit.coefficients);
            (mean, row)
        }
    }
}

/// Fitted mean on the transformed scale.
pub fn predict_transformed(fit: &MetaFit, tau: f64) -> Result<f64, MetaError> {
    if let FitStatus::Failed(reason) = &fit.converged {
        return Err(MetaError::NotConverged(reason.clone()));
    }
    if !(tau > 0.0) {
        return Err(MetaError::InvalidStudy(format!("prediction time {tau} must be positive")));
    }
    Ok(mean_and_gradient(fit, tau).0)
}

/// Fitted mean back-transformed to the probability scale.
pub fn predict_mean(fit: &MetaFit, tau: f64) -> Result<f64, MetaError> {
    Ok(transforms::invert_saturating(fit.spec.transform, predict_transformed(fit, tau)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Prediction {
    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }

    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

/// Point prediction with a 95% Hartung-Knapp confidence interval, all on
/// the probability scale.
pub fn predict(fit: &MetaFit, tau: f64) -> Result<Prediction, MetaError> {
    if let FitStatus::Failed(reason) = &fit.converged {
        return Err(MetaError::NotConverged(reason.clone()));
    }
    if !(tau > 0.0) {
        return Err(MetaError::InvalidStudy(format!("prediction time {tau} must be positive")));
    }
    let (mean, gradient) = mean_and_gradient(fit, tau);
    let p = gradient.len();
    let df = fit.k_used.saturating_sub(p).max(1);
    let se = fit.coef_cov.quadratic_form(&gradient).max(0.0).sqrt();
    let half = t_quantile(df) * se;
    let transform = fit.spec.transform;
    Ok(Prediction {
        point: transforms::invert_saturating(transform, mean),
        ci_low: transforms::invert_saturating(transform, mean - half),
        ci_high: transforms::invert_saturating(transform, mean + half),
    })
}

/// Outcome of one fractional-polynomial power pair in the grid search.
#[derive(Debug, Clone)]
pub struct PowerGridEntry {
    pub powers: (f64, f64),
    /// Weighted root mean squared error on the held-out studies; NaN when
    /// the fit failed.
    pub rmse: f64,
    pub status: FitStatus,
}

/// Fit FP2 models for all 36 unordered power pairs and rank them by the
/// weighted RMSE `sqrt(Σ_k n_k/n (Ĉ_k - fitted(τ_k))²)` on the held-out
/// studies. Failed fits sort last.
pub fn fp2_power_grid(
    studies: &[StudySummary],
    transform: Transform,
    holdout: &[StudySummary],
) -> Result<Vec<PowerGridEntry>, MetaError> {
    if studies.len() < 6 {
        return Err(MetaError::InsufficientStudies { needed: 6, got: studies.len() });
    }
    let mut total_n = 0.0;
    for st in holdout {
        match st.n {
            Some(n) => total_n += n as f64,
            None => return Err(MetaError::MissingSampleSize(st.study_id.clone())),
        }
    }
    if total_n <= 0.0 {
        return Err(MetaError::InvalidStudy("holdout studies have zero total sample size".into()));
    }

    let mut entries = Vec::with_capacity(36);
    for (i, &p1) in FP_POWER_SET.iter().enumerate() {
        for &p2 in &FP_POWER_SET[i..] {
            let spec = MetaModelSpec::new(ModelFamily::Fp2, transform).with_fp_powers((p1, p2));
            let entry = match fit_reml(&spec, studies) {
                Err(e) => PowerGridEntry {
                    powers: (p1, p2),
                    rmse: f64::NAN,
                    status: FitStatus::Failed(e.to_string()),
                },
                Ok(fit) => {
                    let mut sum = 0.0;
                    let mut failed = None;
                    for st in holdout {
                        match predict_mean(&fit, st.tau) {
                            Ok(fitted) => {
                                let w = st.n.unwrap() as f64 / total_n;
                                sum += w * (st.c_hat - fitted) * (st.c_hat - fitted);
                            }
                            Err(e) => {
                                failed = Some(e.to_string());
                                break;
                            }
                        }
                    }
                    match failed {
                        Some(reason) => PowerGridEntry {
                            powers: (p1, p2),
                            rmse: f64::NAN,
                            status: FitStatus::Failed(reason),
                        },
                        None => PowerGridEntry { powers: (p1, p2), rmse: sum.sqrt(), status: fit.converged },
                    }
                }
            };
            entries.push(entry);
        }
    }

    entries.sort_by(|a, b| {
        let fa = a.status.is_failed();
        let fb = b.status.is_failed();
        fa.cmp(&fb).then_with(|| a.rmse.partial_cmp(&b.rmse).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn studies_from(rows: &[(&str, f64, f64, f64)]) -> Vec<StudySummary> {
        rows.iter()
            .map(|&(id, tau, c, var)| StudySummary::new(id, tau, c, var, Some(200)).unwrap())
            .collect()
    }

    #[test]
    fn identical_studies_have_no_heterogeneity() {
        let studies = studies_from(&[
            ("a", 1.0, 0.75, 0.01),
            ("b", 1.2, 0.75, 0.01),
            ("c", 1.4, 0.75, 0.01),
            ("d", 1.6, 0.75, 0.01),
            ("e", 1.8, 0.75, 0.01),
        ]);
        let spec = MetaModelSpec::new(ModelFamily::MetaAnalysis, Transform::Identity);
        let fit = fit_reml(&spec, &studies).unwrap();
        assert_eq!(fit.between_study_var, 0.0);
        assert!((fit.coefficients[0] - 0.75).abs() < 1e-12);
        assert!(fit.converged.is_ok());
        let pred = predict(&fit, 1.0).unwrap();
        assert!((pred.point - 0.75).abs() < 1e-12);
    }

    #[test]
    fn ma_prediction_is_constant_in_tau() {
        let studies = studies_from(&[
            ("a", 0.5, 0.80, 0.02),
            ("b", 1.0, 0.74, 0.01),
            ("c", 1.5, 0.70, 0.015),
            ("d", 2.0, 0.68, 0.02),
        ]);
        let spec = MetaModelSpec::new(ModelFamily::MetaAnalysis, Transform::Logit);
        let fit = fit_reml(&spec, &studies).unwrap();
        let p1 = predict(&fit, 0.5).unwrap();
        let p2 = predict(&fit, 5.0).unwrap();
        assert_eq!(p1.point.to_bits(), p2.point.to_bits());
    }

    #[test]
    fn linear_fit_recovers_noiseless_line() {
        let studies: Vec<StudySummary> = (0..8)
            .map(|i| {
                let tau = 0.25 + i as f64 * 0.25;
                StudySummary::new(format!("s{i}"), tau, 1.0 - 0.1 * tau, 1e-6, Some(500)).unwrap()
            })
            .collect();
        let spec = MetaModelSpec::new(ModelFamily::Linear, Transform::Identity);
        let fit = fit_reml(&spec, &studies).unwrap();
        let pred = predict(&fit, 2.0).unwrap();
        assert!((pred.point - 0.8).abs() < 1e-9, "{}", pred.point);
    }

    #[test]
    fn extrapolated_interval_is_wider() {
        let mut rng = rng_from(5, &[]);
        let studies: Vec<StudySummary> = (0..12)
            .map(|i| {
                let tau = 0.3 + i as f64 * 0.15;
                let c = 0.78 - 0.03 * tau + 0.01 * rng.random::<f64>();
                StudySummary::new(format!("s{i}"), tau, c, 0.002, Some(300)).unwrap()
            })
            .collect();
        let spec = MetaModelSpec::new(ModelFamily::Linear, Transform::Identity);
        let fit = fit_reml(&spec, &studies).unwrap();
        let mean_tau = studies.iter().map(|s| s.tau).sum::<f64>() / studies.len() as f64;
        let max_tau = studies.iter().map(|s| s.tau).fold(0.0, f64::max);
        let inside = predict(&fit, mean_tau).unwrap();
        let outside = predict(&fit, 2.0 * max_tau).unwrap();
        assert!(outside.width() > inside.width());
        assert!(inside.contains(inside.point));
        assert!(inside.width() > 0.0);
    }

    #[test]
    fn fit_is_invariant_to_study_order() {
        let mut studies = studies_from(&[
            ("a", 0.4, 0.82, 0.004),
            ("b", 0.9, 0.76, 0.003),
            ("c", 1.3, 0.72, 0.005),
            ("d", 1.7, 0.70, 0.002),
            ("e", 2.0, 0.69, 0.004),
            ("f", 0.6, 0.79, 0.006),
        ]);
        let spec = MetaModelSpec::new(ModelFamily::Fp2, Transform::Logit);
        let before = fit_reml(&spec, &studies).unwrap();
        studies.reverse();
        studies.swap(0, 3);
        let after = fit_reml(&spec, &studies).unwrap();
        for tau in [0.5, 1.0, 1.9] {
            let a = predict_mean(&before, tau).unwrap();
            let b = predict_mean(&after, tau).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
        assert!((before.between_study_var - after.between_study_var).abs() < 1e-12);
    }

    #[test]
    fn fp2_power_order_is_irrelevant() {
        let studies = studies_from(&[
            ("a", 0.4, 0.82, 0.004),
            ("b", 0.9, 0.76, 0.003),
            ("c", 1.3, 0.72, 0.005),
            ("d", 1.7, 0.70, 0.002),
            ("e", 2.0, 0.69, 0.004),
        ]);
        let fit_ab = fit_reml(
            &MetaModelSpec::new(ModelFamily::Fp2, Transform::Logit).with_fp_powers((-0.5, 2.0)),
            &studies,
        )
        .unwrap();
        let fit_ba = fit_reml(
            &MetaModelSpec::new(ModelFamily::Fp2, Transform::Logit).with_fp_powers((2.0, -0.5)),
            &studies,
        )
        .unwrap();
        for tau in [0.45, 1.1, 1.95] {
            let a = predict_mean(&fit_ab, tau).unwrap();
            let b = predict_mean(&fit_ba, tau).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn cochran_q_matches_hand_formula() {
        let studies = studies_from(&[("a", 1.0, 0.7, 0.01), ("b", 1.5, 0.8, 0.02), ("c", 2.0, 0.6, 0.04)]);
        let spec = MetaModelSpec::new(ModelFamily::MetaAnalysis, Transform::Identity);
        let fit = fit_reml(&spec, &studies).unwrap();
        let w = [100.0, 50.0, 25.0];
        let y = [0.7, 0.8, 0.6];
        let pooled = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / w.iter().sum::<f64>();
        let q: f64 = w.iter().zip(&y).map(|(w, y)| w * (y - pooled) * (y - pooled)).sum();
        assert!((fit.q_stat - q).abs() < 1e-12);
        assert_eq!(fit.q_df, 2);
    }

    #[test]
    fn degenerate_design_is_reported() {
        let studies = studies_from(&[("a", 1.0, 0.7, 0.01), ("b", 1.0, 0.8, 0.02), ("c", 1.0, 0.6, 0.04)]);
        let spec = MetaModelSpec::new(ModelFamily::Linear, Transform::Identity);
        assert!(matches!(fit_reml(&spec, &studies), Err(MetaError::DegenerateDesign)));
    }

    #[test]
    fn insufficient_studies_is_reported() {
        let studies = studies_from(&[("a", 1.0, 0.7, 0.01), ("b", 1.5, 0.8, 0.02)]);
        let spec = MetaModelSpec::new(ModelFamily::Linear, Transform::Identity);
        assert!(matches!(fit_reml(&spec, &studies), Err(MetaError::InsufficientStudies { .. })));
    }

    // Nine-study fixture on the logit scale, constructed so that the
    // balanced REML moment identity gives sigma_a = 0.708 and Q = 22.3
    // with 8 degrees of freedom.
    fn nine_center_fixture() -> Vec<StudySummary> {
        let rows = [
            ("center1", 3.6, 0.498848598711, 1.752652740240e-2, 162),
            ("center2", 4.1, 0.592590301207, 1.634527645921e-2, 149),
            ("center3", 4.7, 0.691716794117, 1.275195695765e-2, 171),
            ("center4", 5.2, 0.756440590144, 9.518750437458e-3, 158),
            ("center5", 5.8, 0.794129628199, 7.495333503510e-3, 166),
            ("center6", 6.3, 0.827317929623, 5.723475548855e-3, 143),
            ("center7", 6.9, 0.868965439533, 3.635776561152e-3, 177),
            ("center8", 7.4, 0.910952112369, 1.845265248408e-3, 154),
            ("center9", 7.9, 0.937297864263, 9.685909067167e-4, 169),
        ];
        rows.iter()
            .map(|&(id, tau, c, var, n)| StudySummary::new(id, tau, c, var, Some(n)).unwrap())
            .collect()
    }

    #[test]
    fn nine_center_fixture_reproduces_summary_statistics() {
        let spec = MetaModelSpec::new(ModelFamily::MetaAnalysis, Transform::Logit);
        let fit = fit_reml(&spec, &nine_center_fixture()).unwrap();
        assert_eq!(fit.q_df, 8);
        assert!((fit.sigma_a() - 0.708).abs() < 0.1, "sigma_a {}", fit.sigma_a());
        assert!((fit.q_stat - 22.3).abs() < 1.0, "Q {}", fit.q_stat);
        assert!((fit.q_pvalue - 0.0044).abs() < 0.002, "p {}", fit.q_pvalue);
    }

    #[test]
    fn decay_recovers_noiseless_parameters() {
        let theta = 1.0_f64;
        let beta = 0.0_f64;
        let r0 = 2.0_f64;
        let rate = beta.exp();
        let studies: Vec<StudySummary> = (0..20)
            .map(|i| {
                let tau = 0.1 + i as f64 * 0.15;
                let y = theta + (r0 - theta) * (-rate * tau).exp();
                let c = 1.0 / (1.0 + (-y).exp());
                StudySummary::new(format!("s{i}"), tau, c, 1e-8, Some(100_000)).unwrap()
            })
            .collect();
        let spec = MetaModelSpec::new(ModelFamily::ExpDecay, Transform::Logit);
        let fit = fit_exp_decay(&spec, &studies).unwrap();
        assert!(fit.converged.is_ok(), "{:?}", fit.converged);
        assert!((fit.coefficients[0] - theta).abs() < 1e-6, "theta {}", fit.coefficients[0]);
        assert!((fit.coefficients[1] - beta).abs() < 1e-6, "beta {}", fit.coefficients[1]);
        assert!((fit.coefficients[2] - r0).abs() < 1e-6, "r0 {}", fit.coefficients[2]);
        // The asymptote estimate is the transformed-scale long-run level.
        let far = predict_transformed(&fit, 1e6).unwrap();
        assert!((far - theta).abs() < 1e-6);
    }

    #[test]
    fn decay_flat_data_fails_gracefully() {
        let studies: Vec<StudySummary> = (0..10)
            .map(|i| StudySummary::new(format!("s{i}"), 0.2 + i as f64 * 0.2, 0.75, 0.001, Some(200)).unwrap())
            .collect();
        let spec = MetaModelSpec::new(ModelFamily::ExpDecay, Transform::Logit);
        let fit = fit_exp_decay(&spec, &studies).unwrap();
        // Flat data leave the decay rate unidentified; any status except a
        // crash is acceptable, and a failure must carry no coefficients.
        if fit.converged.is_failed() {
            assert!(fit.coefficients.is_empty());
        }
    }

    #[test]
    fn decay_requires_four_studies() {
        let studies = studies_from(&[("a", 1.0, 0.7, 0.01), ("b", 1.5, 0.8, 0.02), ("c", 2.0, 0.6, 0.04)]);
        let spec = MetaModelSpec::new(ModelFamily::ExpDecay, Transform::Logit);
        assert!(matches!(fit_exp_decay(&spec, &studies), Err(MetaError::InsufficientStudies { .. })));
    }

    #[test]
    fn subset_rules() {
        let studies: Vec<StudySummary> = (0..30)
            .map(|i| StudySummary::new(format!("s{i:02}"), 0.1 + i as f64 * 0.05, 0.7, 0.01, None).unwrap())
            .collect();
        assert_eq!(subset_by_tau(&studies, SubsetRule::Last30).len(), 9);
        assert_eq!(subset_by_tau(&studies, SubsetRule::All), studies);

        let fifteen = &studies[..15];
        assert_eq!(subset_by_tau(fifteen, SubsetRule::Last50).len(), 8);
        assert_eq!(subset_by_tau(fifteen, SubsetRule::Last30).len(), 5);

        // Kept studies are exactly those with the largest truncation times.
        let last = subset_by_tau(&studies, SubsetRule::Last30);
        let min_kept = last.iter().map(|s| s.tau).fold(f64::INFINITY, f64::min);
        let dropped_max = studies
            .iter()
            .filter(|s| !last.iter().any(|l| l.study_id == s.study_id))
            .map(|s| s.tau)
            .fold(0.0, f64::max);
        assert!(min_kept > dropped_max);
    }

    #[test]
    fn subset_tie_break_is_deterministic() {
        let studies = vec![
            StudySummary::new("b", 1.0, 0.7, 0.01, None).unwrap(),
            StudySummary::new("a", 1.0, 0.8, 0.01, None).unwrap(),
            StudySummary::new("c", 0.5, 0.6, 0.01, None).unwrap(),
        ];
        let kept = subset_by_tau(&studies, SubsetRule::Last30);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].study_id, "a");
    }

    #[test]
    fn power_grid_emits_all_pairs() {
        let mut rng = rng_from(17, &[]);
        let normal = Normal::new(0.0, 0.002).unwrap();
        let studies: Vec<StudySummary> = (0..12)
            .map(|i| {
                let tau: f64 = 0.2 + i as f64 * 0.16;
                let y = 1.0 + 0.35 * tau.powf(-0.5) - 0.4 * tau.sqrt() + normal.sample(&mut rng);
                let c = 1.0 / (1.0 + (-y).exp());
                StudySummary::new(format!("s{i}"), tau, c, 0.001, Some(400)).unwrap()
            })
            .collect();
        let grid = fp2_power_grid(&studies, Transform::Logit, &studies).unwrap();
        assert_eq!(grid.len(), 36);
        let rank = grid.iter().position(|e| e.powers == (-0.5, 0.5)).unwrap();
        assert!(rank < 3, "generating pair ranked {rank}");

        // Ranking is insensitive to a common rescaling of the weights.
        let rescaled: Vec<StudySummary> = studies
            .iter()
            .map(|s| StudySummary::new(s.study_id.clone(), s.tau, s.c_hat, s.var_hat, s.n.map(|n| n * 7)).unwrap())
            .collect();
        let grid2 = fp2_power_grid(&studies, Transform::Logit, &rescaled).unwrap();
        let order1: Vec<(f64, f64)> = grid.iter().map(|e| e.powers).collect();
        let order2: Vec<(f64, f64)> = grid2.iter().map(|e| e.powers).collect();
        assert_eq!(order1, order2);
    }

    #[test]
    fn labels_round_trip() {
        for label in ["ma(id)", "fp2(logit)", "rcs(asin)", "ma(logit,last30)", "expdecay(id)"] {
            let spec = MetaModelSpec::parse_label(label).unwrap();
            assert_eq!(spec.label(), label);
        }
        assert!(MetaModelSpec::parse_label("nope(logit)").is_err());
        assert!(MetaModelSpec::parse_label("ma[logit]").is_err());
    }
}
