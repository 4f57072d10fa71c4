//! Estimation of the restricted concordance probability
//! `C(τ) = P(η_i > η_j | T_i < T_j, T_i ≤ τ)` and its sampling variance
//! from right-censored validation data.
//!
//! Three estimators are provided:
//!
//! - [`c_relative_frequency`] — the plain pairwise fraction, valid only for
//!   fully uncensored data,
//! - [`c_harrell`] — discards pairs whose shorter observed time is censored,
//! - [`c_uno`] — reweights comparable pairs by the inverse squared
//!   Kaplan-Meier estimate of the censoring survival function (or by the
//!   product of its value and left limit, see [`UnoVariant`]).
//!
//! On uncensored data the three estimators coincide exactly. Pairs with
//! tied scores contribute 1/2 to the numerator; tied observed times are
//! rejected at construction (see [`SurvivalSample::new`]) and can be broken
//! deterministically with [`break_time_ties`].

mod concordance;
mod step;

pub use step::StepFunction;

use crate::rng::{rng_from, STREAM_BOOTSTRAP};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurvivalError {
    #[error("EmptySample: sample contains no subjects")]
    EmptySample,
    #[error("TooFewSubjects: need at least 2 subjects, got {0}")]
    TooFewSubjects(usize),
    #[error("LengthMismatch: times/events/scores have lengths {times}/{events}/{scores}")]
    LengthMismatch { times: usize, events: usize, scores: usize },
    #[error("InvalidTime: observed time at index {index} is {value}, must be positive and finite")]
    InvalidTime { index: usize, value: f64 },
    #[error("InvalidScore: score at index {index} is {value}, must be finite")]
    InvalidScore { index: usize, value: f64 },
    #[error("TiedTimes: observed time {0} occurs more than once; break ties first")]
    TiedTimes(f64),
    #[error("UnbreakableTies: {count} values tied at {value} cannot be separated within the gap below")]
    UnbreakableTies { value: f64, count: usize },
    #[error("InvalidTau: truncation time {0} must be positive")]
    InvalidTau(f64),
    #[error("CensoringPresent: the relative-frequency estimator requires uncensored data")]
    CensoringPresent,
    #[error("NoComparablePairs: no usable pair with shorter time at or below tau")]
    NoComparablePairs,
    #[error("ZeroCensoringSurvival: censoring survival estimate is zero at time {time}; tau is too large for these data")]
    ZeroCensoringSurvival { time: f64 },
    #[error("TooFewReps: bootstrap needs at least 2 resamples, got {0}")]
    TooFewReps(usize),
    #[error("AllResamplesFailed: fewer than two bootstrap resamples produced an estimate")]
    AllResamplesFailed,
    #[error("InvalidStepFunction: {0}")]
    InvalidStepFunction(String),
    #[error("InvalidEstimate: {0}")]
    InvalidEstimate(String),
}

/// How Uno's estimator evaluates the censoring survival function at the
/// shorter time of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnoVariant {
    /// Weight `1 / G(t)^2`.
    Squared,
    /// Weight `1 / (G(t) · G(t-))`, the form used by the pec package.
    #[default]
    GerdsLeftLimit,
}

impl UnoVariant {
    pub fn label(self) -> &'static str {
        match self {
            UnoVariant::Squared => "squared",
            UnoVariant::GerdsLeftLimit => "gerds",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    RelativeFrequency,
    Harrell,
    Uno(UnoVariant),
}

impl Estimator {
    pub fn label(self) -> &'static str {
        match self {
            Estimator::RelativeFrequency => "rf",
            Estimator::Harrell => "harrell",
            Estimator::Uno(_) => "uno",
        }
    }
}

/// Subject-level data of one validation study: observed time, event
/// indicator (`true` = event, `false` = censored), and prognostic score.
///
/// Construction enforces positive finite times, finite scores, at least two
/// subjects, and pairwise distinct observed times.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSample {
    times: Vec<f64>,
    events: Vec<bool>,
    scores: Vec<f64>,
}

impl SurvivalSample {
    pub fn new(times: Vec<f64>, events: Vec<bool>, scores: Vec<f64>) -> Result<Self, SurvivalError> {
        if times.len() != events.len() || times.len() != scores.len() {
            return Err(SurvivalError::LengthMismatch {
                times: times.len(),
                events: events.len(),
                scores: scores.len(),
            });
        }
        if times.is_empty() {
            return Err(SurvivalError::EmptySample);
        }
        if times.len() < 2 {
            return Err(SurvivalError::TooFewSubjects(times.len()));
        }
        for (index, &value) in times.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(SurvivalError::InvalidTime { index, value });
            }
        }
        for (index, &value) in scores.iter().enumerate() {
            if !value.is_finite() {
                return Err(SurvivalError::InvalidScore { index, value });
            }
        }
        let mut sorted = times.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(SurvivalError::TiedTimes(w[0]));
            }
        }
        Ok(SurvivalSample { times, events, scores })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Fraction of censored subjects.
    pub fn censoring_fraction(&self) -> f64 {
        let censored = self.events.iter().filter(|&&e| !e).count();
        censored as f64 / self.len() as f64
    }
}

/// One study-level estimate `(τ, Ĉ, σ̂²)` with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CIndexEstimate {
    pub tau: f64,
    pub c_hat: f64,
    pub var_hat: f64,
    pub n: usize,
    pub estimator: Estimator,
    pub bootstrap_reps: Option<usize>,
}

impl CIndexEstimate {
    pub fn new(
        tau: f64,
        c_hat: f64,
        var_hat: f64,
        n: usize,
        estimator: Estimator,
        bootstrap_reps: Option<usize>,
    ) -> Result<Self, SurvivalError> {
        if !(tau > 0.0) {
            return Err(SurvivalError::InvalidTau(tau));
        }
        if !(0.0..=1.0).contains(&c_hat) {
            return Err(SurvivalError::InvalidEstimate(format!("c_hat {c_hat} outside [0, 1]")));
        }
        if !(var_hat >= 0.0) {
            return Err(SurvivalError::InvalidEstimate(format!("var_hat {var_hat} is negative")));
        }
        Ok(CIndexEstimate { tau, c_hat, var_hat, n, estimator, bootstrap_reps })
    }
}

/// Kaplan-Meier estimate of the censoring survival function
/// `G(t) = P(C > t)`, computed by swapping the roles of events and
/// censorings. Equals 1 everywhere when the sample has no censored
/// subjects.
pub fn km_censoring_survival(sample: &SurvivalSample) -> StepFunction {
    concordance::reverse_km(sample.times(), sample.events()).expect("non-empty by construction")
}

/// Pairwise relative-frequency estimate of `C(τ)` for uncensored data.
pub fn c_relative_frequency(sample: &SurvivalSample, tau: f64) -> Result<f64, SurvivalError> {
    concordance::estimate_raw(sample.times(), sample.events(), sample.scores(), tau, Estimator::RelativeFrequency)
}

/// Harrell's C: comparable pairs restricted to those whose shorter time is
/// an observed event at or below `tau`.
pub fn c_harrell(sample: &SurvivalSample, tau: f64) -> Result<f64, SurvivalError> {
    concordance::estimate_raw(sample.times(), sample.events(), sample.scores(), tau, Estimator::Harrell)
}

/// Uno's C: Harrell's comparable pairs reweighted by the inverse estimated
/// probability of remaining uncensored at the shorter time.
pub fn c_uno(sample: &SurvivalSample, tau: f64, variant: UnoVariant) -> Result<f64, SurvivalError> {
    concordance::estimate_raw(sample.times(), sample.events(), sample.scores(), tau, Estimator::Uno(variant))
}

pub fn estimate(sample: &SurvivalSample, tau: f64, estimator: Estimator) -> Result<f64, SurvivalError> {
    concordance::estimate_raw(sample.times(), sample.events(), sample.scores(), tau, estimator)
}

/// Relative-frequency estimates on a grid of truncation times, sharing one
/// counting pass. Requires uncensored data.
pub fn c_relative_frequency_curve(sample: &SurvivalSample, taus: &[f64]) -> Result<Vec<f64>, SurvivalError> {
    if sample.events().iter().any(|&e| !e) {
        return Err(SurvivalError::CensoringPresent);
    }
    concordance::rf_curve(sample.times(), sample.scores(), taus)
}

/// Result of a bootstrap variance estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapEstimate {
    /// Empirical variance of the estimator over the usable resamples.
    pub variance: f64,
    /// Resamples dropped because the estimator errored on them.
    pub dropped: usize,
    /// Requested number of resamples.
    pub reps: usize,
}

/// Subject-level bootstrap variance of a concordance estimator.
///
/// Each resample draws `n` subjects with replacement and recomputes the
/// estimator from scratch (including the censoring Kaplan-Meier for Uno's
/// C). Resamples use seeds derived from `(seed, replicate)`, so the result
/// is identical regardless of parallel scheduling.
pub fn bootstrap_variance(
    sample: &SurvivalSample,
    tau: f64,
    estimator: Estimator,
    reps: usize,
    seed: u64,
) -> Result<BootstrapEstimate, SurvivalError> {
    if reps < 2 {
        return Err(SurvivalError::TooFewReps(reps));
    }
    let n = sample.len();
    let estimates: Vec<Option<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng_from(seed, &[STREAM_BOOTSTRAP, rep as u64]);
            let mut times = Vec::with_capacity(n);
            let mut events = Vec::with_capacity(n);
            let mut scores = Vec::with_capacity(n);
            for _ in 0..n {
                let pick = rng.random_range(0..n);
                times.push(sample.times[pick]);
                events.push(sample.events[pick]);
                scores.push(sample.scores[pick]);
            }
            concordance::estimate_raw(&times, &events, &scores, tau, estimator).ok()
        })
        .collect();

    let usable: Vec<f64> = estimates.iter().flatten().copied().collect();
    if usable.len() < 2 {
        return Err(SurvivalError::AllResamplesFailed);
    }
    let m = usable.len() as f64;
    let mean = usable.iter().sum::<f64>() / m;
    let variance = usable.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    Ok(BootstrapEstimate {
        variance: variance.max(0.0),
        dropped: reps - usable.len(),
        reps,
    })
}

/// Break tied time values deterministically while preserving ranks.
///
/// Each group of tied values is spread downward into the gap separating it
/// from the next smaller distinct value, with the within-group order chosen
/// by the seeded generator. One member keeps the original value, so maxima
/// (and any administrative censoring limit) are never exceeded.
pub fn break_time_ties(times: &[f64], seed: u64) -> Result<Vec<f64>, SurvivalError> {
    let n = times.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[a].partial_cmp(&times[b]).expect("times are finite"));

    let mut out = times.to_vec();
    let mut rng = rng_from(seed, &[]);
    let mut i = 0;
    let mut prev_value = 0.0;
    while i < n {
        let value = times[order[i]];
        let mut j = i;
        while j < n && times[order[j]] == value {
            j += 1;
        }
        let group = j - i;
        if group > 1 {
            let gap = value - prev_value;
            let step = (gap * 1e-9 / group as f64).max(value.abs() * f64::EPSILON * 4.0);
            if step * group as f64 >= gap {
                return Err(SurvivalError::UnbreakableTies { value, count: group });
            }
            // Shuffled offsets 0, step, 2*step, ... so the within-group
            // order does not depend on input order.
            let mut offsets: Vec<usize> = (0..group).collect();
            for k in (1..group).rev() {
                let pick = rng.random_range(0..=k);
                offsets.swap(k, pick);
            }
            let mut ok = true;
            for (g, &idx) in order[i..j].iter().enumerate() {
                let adjusted = value - offsets[g] as f64 * step;
                if adjusted <= prev_value || (offsets[g] > 0 && adjusted >= value) {
                    ok = false;
                    break;
                }
                out[idx] = adjusted;
            }
            if !ok {
                return Err(SurvivalError::UnbreakableTies { value, count: group });
            }
        }
        prev_value = value;
        i = j;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Exp, Normal};

    fn sample(times: &[f64], events: &[u8], scores: &[f64]) -> SurvivalSample {
        SurvivalSample::new(
            times.to_vec(),
            events.iter().map(|&e| e == 1).collect(),
            scores.to_vec(),
        )
        .unwrap()
    }

    fn random_censored(n: usize, seed: u64) -> SurvivalSample {
        let mut rng = rng_from(seed, &[]);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let exp = Exp::new(0.8).unwrap();
        let mut times = Vec::with_capacity(n);
        let mut events = Vec::with_capacity(n);
        let mut scores = Vec::with_capacity(n);
        for _ in 0..n {
            let t: f64 = exp.sample(&mut rng);
            let c: f64 = exp.sample(&mut rng);
            times.push(t.min(c).max(1e-9));
            events.push(t <= c);
            scores.push(normal.sample(&mut rng) - t);
        }
        let times = break_time_ties(&times, seed ^ 1).unwrap();
        SurvivalSample::new(times, events, scores).unwrap()
    }

    // Literal transcriptions of the estimator definitions, used as oracles.
    mod naive {
        pub fn g_at(times: &[f64], events: &[bool], t: f64, strict: bool) -> f64 {
            let mut g = 1.0;
            let mut jumps: Vec<usize> = (0..times.len()).filter(|&i| !events[i]).collect();
            jumps.sort_by(|&a, &b| times[a].partial_cmp(&times[b]).unwrap());
            for &i in &jumps {
                let included = if strict { times[i] < t } else { times[i] <= t };
                if included {
                    let at_risk = times.iter().filter(|&&u| u >= times[i]).count() as f64;
                    g *= 1.0 - 1.0 / at_risk;
                }
            }
            g
        }

        pub fn concordance(
            times: &[f64],
            _events: &[bool],
            scores: &[f64],
            tau: f64,
            weight: impl Fn(usize) -> Option<f64>,
        ) -> Option<f64> {
            let n = times.len();
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i == j || !(times[i] < times[j]) || !(times[i] <= tau) {
                        continue;
                    }
                    let Some(w) = weight(i) else { continue };
                    den += w;
                    if scores[i] > scores[j] {
                        num += w;
                    } else if scores[i] == scores[j] {
                        num += 0.5 * w;
                    }
                }
            }
            if den == 0.0 {
                None
            } else {
                Some(num / den)
            }
        }
    }

    #[test]
    fn km_without_censoring_is_one() {
        let s = sample(&[1.0, 2.0, 3.0], &[1, 1, 1], &[3.0, 2.0, 1.0]);
        let g = km_censoring_survival(&s);
        for t in [0.5, 1.0, 2.5, 3.0] {
            assert_eq!(g.evaluate(t), 1.0);
        }
    }

    #[test]
    fn km_three_subject_example() {
        let s = sample(&[1.0, 2.0, 3.0], &[1, 0, 1], &[3.0, 2.0, 1.0]);
        let g = km_censoring_survival(&s);
        assert_eq!(g.evaluate(1.9), 1.0);
        assert_eq!(g.evaluate(2.0), 0.5);
        assert_eq!(g.evaluate(3.0), 0.5);
        assert_eq!(g.evaluate_left(2.0), 1.0);
    }

    #[test]
    fn km_four_subject_example() {
        let s = sample(&[1.0, 2.0, 3.0, 4.0], &[0, 1, 0, 1], &[4.0, 3.0, 2.0, 1.0]);
        let g = km_censoring_survival(&s);
        assert_eq!(g.evaluate(0.5), 1.0);
        assert_eq!(g.evaluate(1.0), 0.75);
        assert_eq!(g.evaluate(2.9), 0.75);
        assert_eq!(g.evaluate(3.0), 0.375);
        assert_eq!(g.evaluate(10.0), 0.375);
        assert_eq!(g.evaluate_left(3.0), 0.75);
    }

    #[test]
    fn rf_perfect_discordance_and_concordance() {
        let times = [1.0, 2.0, 3.0, 4.0];
        let anti = sample(&times, &[1, 1, 1, 1], &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(c_relative_frequency(&anti, f64::INFINITY).unwrap(), 0.0);
        let perfect = sample(&times, &[1, 1, 1, 1], &[-1.0, -2.0, -3.0, -4.0]);
        assert_eq!(c_relative_frequency(&perfect, f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn rf_hand_enumerated_example() {
        let s = sample(&[1.0, 2.0, 3.0, 4.0], &[1, 1, 1, 1], &[4.0, 1.0, 3.0, 2.0]);
        let c = c_relative_frequency(&s, 3.5).unwrap();
        assert!((c - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn rf_rejects_censoring() {
        let s = sample(&[1.0, 2.0], &[1, 0], &[1.0, 0.0]);
        assert!(matches!(c_relative_frequency(&s, 5.0), Err(SurvivalError::CensoringPresent)));
    }

    #[test]
    fn harrell_single_comparable_pair() {
        let s = sample(&[1.0, 2.0, 3.0], &[0, 1, 1], &[9.0, 5.0, 1.0]);
        assert_eq!(c_harrell(&s, f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn no_comparable_pairs_is_an_error() {
        let s = sample(&[1.0, 2.0], &[0, 0], &[1.0, 2.0]);
        assert!(matches!(c_harrell(&s, 10.0), Err(SurvivalError::NoComparablePairs)));
        // tau below every observed time
        let s = sample(&[1.0, 2.0], &[1, 1], &[1.0, 2.0]);
        assert!(matches!(c_harrell(&s, 0.5), Err(SurvivalError::NoComparablePairs)));
    }

    #[test]
    fn uncensored_estimators_coincide_bitwise() {
        for seed in 0..20 {
            let mut rng = rng_from(seed, &[7]);
            let normal = Normal::new(0.0, 1.0).unwrap();
            let n = 3 + (seed as usize % 30);
            let times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
            let times = break_time_ties(&times, seed).unwrap();
            let scores: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
            let s = SurvivalSample::new(times, vec![true; n], scores).unwrap();
            let tau = 0.75;
            match c_relative_frequency(&s, tau) {
                Ok(rf) => {
                    assert_eq!(rf.to_bits(), c_harrell(&s, tau).unwrap().to_bits());
                    assert_eq!(rf.to_bits(), c_uno(&s, tau, UnoVariant::Squared).unwrap().to_bits());
                    assert_eq!(rf.to_bits(), c_uno(&s, tau, UnoVariant::GerdsLeftLimit).unwrap().to_bits());
                }
                Err(_) => {
                    assert!(c_harrell(&s, tau).is_err());
                    assert!(c_uno(&s, tau, UnoVariant::Squared).is_err());
                }
            }
        }
    }

    #[test]
    fn estimators_match_naive_double_loop() {
        for seed in 0..25 {
            let s = random_censored(30, 1000 + seed);
            let tau = 1.2;
            let harrell = c_harrell(&s, tau);
            let oracle = naive::concordance(s.times(), s.events(), s.scores(), tau, |i| {
                s.events()[i].then_some(1.0)
            });
            match (harrell, oracle) {
                (Ok(a), Some(b)) => assert!((a - b).abs() < 1e-12),
                (Err(SurvivalError::NoComparablePairs), None) => {}
                other => panic!("mismatch: {other:?}"),
            }

            for variant in [UnoVariant::Squared, UnoVariant::GerdsLeftLimit] {
                let uno = c_uno(&s, tau, variant).unwrap();
                let oracle = naive::concordance(s.times(), s.events(), s.scores(), tau, |i| {
                    if !s.events()[i] {
                        return None;
                    }
                    let t = s.times()[i];
                    let g_right = naive::g_at(s.times(), s.events(), t, false);
                    let g_other = match variant {
                        UnoVariant::Squared => g_right,
                        UnoVariant::GerdsLeftLimit => naive::g_at(s.times(), s.events(), t, true),
                    };
                    Some(1.0 / (g_right * g_other))
                })
                .unwrap();
                assert!((uno - oracle).abs() < 1e-12, "variant {variant:?} seed {seed}");
            }
        }
    }

    #[test]
    fn restriction_consistency() {
        let s = random_censored(40, 9);
        let max_t = s.times().iter().cloned().fold(0.0, f64::max);
        let restricted = c_harrell(&s, max_t).unwrap();
        let unrestricted = c_harrell(&s, f64::INFINITY).unwrap();
        assert_eq!(restricted.to_bits(), unrestricted.to_bits());
    }

    #[test]
    fn curve_matches_pointwise_estimates() {
        let s = random_censored(60, 4);
        let uncensored = SurvivalSample::new(s.times().to_vec(), vec![true; s.len()], s.scores().to_vec()).unwrap();
        let taus = [0.2, 0.5, 0.9, 1.5, 3.0];
        let curve = c_relative_frequency_curve(&uncensored, &taus).unwrap();
        for (i, &tau) in taus.iter().enumerate() {
            let direct = c_relative_frequency(&uncensored, tau).unwrap();
            assert!((curve[i] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let s = random_censored(80, 11);
        let a = bootstrap_variance(&s, 1.0, Estimator::Uno(UnoVariant::GerdsLeftLimit), 200, 99).unwrap();
        let b = bootstrap_variance(&s, 1.0, Estimator::Uno(UnoVariant::GerdsLeftLimit), 200, 99).unwrap();
        assert_eq!(a.variance.to_bits(), b.variance.to_bits());
        assert_eq!(a.dropped, b.dropped);
    }

    #[test]
    fn bootstrap_constant_scores_give_zero_variance() {
        // All scores equal: every pair contributes 1/2, the estimate is a
        // constant 0.5 in every resample.
        let s = sample(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1, 1, 1, 1, 1], &[2.0, 2.0, 2.0, 2.0, 2.0]);
        let b = bootstrap_variance(&s, 10.0, Estimator::Harrell, 50, 3).unwrap();
        assert_eq!(b.variance, 0.0);
        assert_eq!(b.dropped, 0);
    }

    #[test]
    fn bootstrap_requires_two_reps() {
        let s = random_censored(10, 2);
        assert!(matches!(
            bootstrap_variance(&s, 1.0, Estimator::Harrell, 1, 5),
            Err(SurvivalError::TooFewReps(1))
        ));
    }

    #[test]
    fn bootstrap_sd_tracks_replicate_sd() {
        // Compare the bootstrap SD on one sample against the SD of the
        // estimator across independent replicate samples.
        let n = 500;
        let tau = 1.0;
        let replicate_estimates: Vec<f64> = (0..200)
            .map(|r| {
                let s = random_censored(n, 40_000 + r);
                c_harrell(&s, tau).unwrap()
            })
            .collect();
        let m = replicate_estimates.len() as f64;
        let mean = replicate_estimates.iter().sum::<f64>() / m;
        let replicate_sd =
            (replicate_estimates.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)).sqrt();

        let s = random_censored(n, 77);
        let boot = bootstrap_variance(&s, tau, Estimator::Harrell, 300, 123).unwrap();
        let boot_sd = boot.variance.sqrt();
        assert!(
            boot_sd < 1.5 * replicate_sd && boot_sd > replicate_sd / 1.5,
            "bootstrap sd {boot_sd} vs replicate sd {replicate_sd}"
        );
    }

    #[test]
    fn tie_breaking_preserves_ranks() {
        let times = [0.5, 0.2, 0.5, 0.5, 0.9, 0.2];
        let jittered = break_time_ties(&times, 42).unwrap();
        // distinct
        let mut sorted = jittered.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in sorted.windows(2) {
            assert!(w[0] < w[1]);
        }
        // ranks against distinct values preserved, nothing exceeds original
        for (orig, jit) in times.iter().zip(&jittered) {
            assert!(jit <= orig);
            assert!((orig - jit) < 1e-6);
        }
        assert_eq!(jittered[4], 0.9);
        // deterministic
        assert_eq!(break_time_ties(&times, 42).unwrap(), jittered);
        // untouched when no ties
        let clean = [0.1, 0.2, 0.3];
        assert_eq!(break_time_ties(&clean, 9).unwrap(), clean.to_vec());
    }

    #[test]
    fn tied_construction_is_rejected() {
        let err = SurvivalSample::new(vec![1.0, 1.0, 2.0], vec![true; 3], vec![1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, SurvivalError::TiedTimes(_)));
    }

    #[test]
    fn estimate_bounds_hold() {
        for seed in 0..10 {
            let s = random_censored(25, 300 + seed);
            for est in [
                Estimator::Harrell,
                Estimator::Uno(UnoVariant::Squared),
                Estimator::Uno(UnoVariant::GerdsLeftLimit),
            ] {
                if let Ok(c) = estimate(&s, 0.8, est) {
                    assert!((0.0..=1.0).contains(&c));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn monotone_score_transform_is_invariant(seed in 0u64..500) {
            let s = random_censored(20, seed);
            let transformed: Vec<f64> = s.scores().iter().map(|&x| (x * 0.3).atan() * 2.0 + 1.0).collect();
            let t = SurvivalSample::new(s.times().to_vec(), s.events().to_vec(), transformed).unwrap();
            for est in [Estimator::Harrell, Estimator::Uno(UnoVariant::GerdsLeftLimit)] {
                match (estimate(&s, 1.1, est), estimate(&t, 1.1, est)) {
                    (Ok(a), Ok(b)) => prop_assert_eq!(a.to_bits(), b.to_bits()),
                    (Err(_), Err(_)) => {}
                    other => prop_assert!(false, "mismatch {:?}", other),
                }
            }
        }

        #[test]
        fn negating_scores_reverses(seed in 0u64..500) {
            let s = random_censored(20, seed);
            let negated: Vec<f64> = s.scores().iter().map(|&x| -x).collect();
            let t = SurvivalSample::new(s.times().to_vec(), s.events().to_vec(), negated).unwrap();
            for est in [Estimator::Harrell, Estimator::Uno(UnoVariant::Squared)] {
                if let (Ok(a), Ok(b)) = (estimate(&s, 1.1, est), estimate(&t, 1.1, est)) {
                    prop_assert!((a - (1.0 - b)).abs() < 1e-12);
                }
            }
        }
    }
}
