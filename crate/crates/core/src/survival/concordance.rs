//! Pairwise concordance counting engine shared by the public estimators,
//! the bootstrap, and the simulation oracle.
//!
//! All estimators here are ratios of pair sums where the weight depends
//! only on the member of the pair with the shorter observed time. Subjects
//! are processed in groups of equal time, descending, over a Fenwick tree
//! of score ranks: each group is queried against the set of strictly longer
//! observations before being inserted, so tied times never form comparable
//! pairs. This tolerates the tied times that arise in bootstrap resamples,
//! which the public [`SurvivalSample`](super::SurvivalSample) type forbids.

use super::{Estimator, StepFunction, SurvivalError, UnoVariant};

struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick { tree: vec![0; n + 1] }
    }

    fn add(&mut self, mut i: usize) {
        i += 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Count of inserted ranks `<= i`.
    fn prefix(&self, i: usize) -> u64 {
        let mut i = i + 1;
        let mut total = 0;
        while i > 0 {
            total += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        total
    }
}

fn score_ranks(scores: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    sorted.dedup();
    let ranks = scores
        .iter()
        .map(|s| sorted.binary_search_by(|c| c.partial_cmp(s).unwrap()).unwrap())
        .collect();
    (sorted, ranks)
}

pub(super) enum Weighting<'a> {
    /// Every ordered pair counts; requires fully uncensored data upstream.
    Uniform,
    /// Pairs whose shorter time is censored are discarded.
    EventGate,
    /// Inverse-probability-of-censoring weights from the estimate of the
    /// censoring survival function.
    Ipcw { g: &'a StepFunction, variant: UnoVariant },
}

impl Weighting<'_> {
    /// Weight for pairs whose shorter member is the given subject, or
    /// `None` when such pairs are discarded.
    fn weight(&self, time: f64, event: bool) -> Result<Option<f64>, SurvivalError> {
        match self {
            Weighting::Uniform => Ok(Some(1.0)),
            Weighting::EventGate => Ok(if event { Some(1.0) } else { None }),
            Weighting::Ipcw { g, variant } => {
                if !event {
                    return Ok(None);
                }
                let g_right = g.evaluate(time);
                if g_right <= 0.0 {
                    return Err(SurvivalError::ZeroCensoringSurvival { time });
                }
                let denom = match variant {
                    UnoVariant::Squared => g_right * g_right,
                    UnoVariant::GerdsLeftLimit => g_right * g.evaluate_left(time),
                };
                Ok(Some(1.0 / denom))
            }
        }
    }
}

/// Numerator and denominator of a weighted pairwise concordance ratio.
///
/// Tied scores contribute 1/2 to the numerator.
pub(super) fn pair_totals(
    times: &[f64],
    events: &[bool],
    scores: &[f64],
    tau: f64,
    weighting: &Weighting<'_>,
) -> Result<(f64, f64), SurvivalError> {
    let n = times.len();
    if n == 0 {
        return Err(SurvivalError::EmptySample);
    }
    if !(tau > 0.0) {
        return Err(SurvivalError::InvalidTau(tau));
    }

    let (_, ranks) = score_ranks(scores);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[b].partial_cmp(&times[a]).expect("times are finite"));

    let mut fen = Fenwick::new(n);
    let mut inserted = 0u64;
    let mut numerator = 0.0;
    let mut denominator = 0.0;

    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && times[order[j]] == times[order[i]] {
            j += 1;
        }
        for &idx in &order[i..j] {
            let t = times[idx];
            if t <= tau && inserted > 0 {
                if let Some(w) = weighting.weight(t, events[idx])? {
                    let r = ranks[idx];
                    let at_or_below = fen.prefix(r);
                    let at = at_or_below - if r > 0 { fen.prefix(r - 1) } else { 0 };
                    let below = at_or_below - at;
                    numerator += w * (below as f64 + 0.5 * at as f64);
                    denominator += w * inserted as f64;
                }
            }
        }
        for &idx in &order[i..j] {
            fen.add(ranks[idx]);
            inserted += 1;
        }
        i = j;
    }

    Ok((numerator, denominator))
}

/// Kaplan-Meier estimate of the censoring survival function `G(t) = P(C > t)`,
/// obtained by treating censorings as events. Handles tied times by grouping;
/// at a tied time, subjects with an actual event stay in the risk set for the
/// censoring factor.
pub(super) fn reverse_km(times: &[f64], events: &[bool]) -> Result<StepFunction, SurvivalError> {
    let n = times.len();
    if n == 0 {
        return Err(SurvivalError::EmptySample);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[a].partial_cmp(&times[b]).expect("times are finite"));

    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut surv = 1.0;
    let mut i = 0;
    while i < n {
        let t = times[order[i]];
        let at_risk = (n - i) as f64;
        let mut j = i;
        let mut censored = 0.0;
        while j < n && times[order[j]] == t {
            if !events[order[j]] {
                censored += 1.0;
            }
            j += 1;
        }
        if censored > 0.0 {
            surv *= 1.0 - censored / at_risk;
            jump_times.push(t);
            values.push(surv.max(0.0));
        }
        i = j;
    }
    StepFunction::new(jump_times, values)
}

/// One estimate from raw arrays, tolerating tied times. Used for bootstrap
/// resamples; the public API goes through `SurvivalSample`.
pub(super) fn estimate_raw(
    times: &[f64],
    events: &[bool],
    scores: &[f64],
    tau: f64,
    estimator: Estimator,
) -> Result<f64, SurvivalError> {
    let (num, den) = match estimator {
        Estimator::RelativeFrequency => {
            if events.iter().any(|&e| !e) {
                return Err(SurvivalError::CensoringPresent);
            }
            pair_totals(times, events, scores, tau, &Weighting::Uniform)?
        }
        Estimator::Harrell => pair_totals(times, events, scores, tau, &Weighting::EventGate)?,
        Estimator::Uno(variant) => {
            let g = reverse_km(times, events)?;
            pair_totals(times, events, scores, tau, &Weighting::Ipcw { g: &g, variant })?
        }
    };
    if den == 0.0 {
        return Err(SurvivalError::NoComparablePairs);
    }
    Ok(num / den)
}

/// Relative-frequency estimates over a grid of truncation times in one pass.
///
/// Per-subject pair contributions are accumulated once, sorted by time, and
/// prefix-summed; each grid value is then a ratio of two prefix sums.
pub(super) fn rf_curve(
    times: &[f64],
    scores: &[f64],
    taus: &[f64],
) -> Result<Vec<f64>, SurvivalError> {
    let n = times.len();
    if n == 0 {
        return Err(SurvivalError::EmptySample);
    }
    if let Some(&bad) = taus.iter().find(|&&t| !(t > 0.0)) {
        return Err(SurvivalError::InvalidTau(bad));
    }

    let (_, ranks) = score_ranks(scores);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[b].partial_cmp(&times[a]).expect("times are finite"));

    let mut fen = Fenwick::new(n);
    let mut inserted = 0u64;
    // (time, numerator share, denominator share), built in descending time order.
    let mut contributions: Vec<(f64, f64, f64)> = Vec::with_capacity(n);

    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && times[order[j]] == times[order[i]] {
            j += 1;
        }
        for &idx in &order[i..j] {
            if inserted > 0 {
                let r = ranks[idx];
                let at_or_below = fen.prefix(r);
                let at = at_or_below - if r > 0 { fen.prefix(r - 1) } else { 0 };
                let below = at_or_below - at;
                contributions.push((
                    times[idx],
                    below as f64 + 0.5 * at as f64,
                    inserted as f64,
                ));
            }
        }
        for &idx in &order[i..j] {
            fen.add(ranks[idx]);
            inserted += 1;
        }
        i = j;
    }

    contributions.reverse(); // ascending time
    let cut_times: Vec<f64> = contributions.iter().map(|c| c.0).collect();
    let mut num_prefix = Vec::with_capacity(contributions.len());
    let mut den_prefix = Vec::with_capacity(contributions.len());
    let (mut num, mut den) = (0.0, 0.0);
    for &(_, n_i, d_i) in &contributions {
        num += n_i;
        den += d_i;
        num_prefix.push(num);
        den_prefix.push(den);
    }

    taus.iter()
        .map(|&tau| {
            let k = cut_times.partition_point(|&t| t <= tau);
            if k == 0 || den_prefix[k - 1] == 0.0 {
                Err(SurvivalError::NoComparablePairs)
            } else {
                Ok(num_prefix[k - 1] / den_prefix[k - 1])
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_censoring_survival_is_an_error() {
        // A hand-built G that is zero at an event time with longer
        // observations still present.
        let g = StepFunction::new(vec![0.5], vec![0.0]).unwrap();
        let times = [1.0, 2.0];
        let events = [true, true];
        let scores = [1.0, 0.0];
        let err = pair_totals(&times, &events, &scores, 10.0, &Weighting::Ipcw {
            g: &g,
            variant: UnoVariant::Squared,
        })
        .unwrap_err();
        assert!(matches!(err, SurvivalError::ZeroCensoringSurvival { .. }));
    }

    #[test]
    fn tied_times_never_compare() {
        // Duplicated subject rows, as in a bootstrap resample.
        let times = [1.0, 1.0, 2.0];
        let events = [true, true, true];
        let scores = [3.0, 3.0, 1.0];
        let (num, den) = pair_totals(&times, &events, &scores, 10.0, &Weighting::Uniform).unwrap();
        // Only the two (t=1, t=2) pairs are comparable, both concordant.
        assert_eq!(den, 2.0);
        assert_eq!(num, 2.0);
    }

    #[test]
    fn reverse_km_groups_ties() {
        let g = reverse_km(&[1.0, 1.0, 2.0], &[false, false, true]).unwrap();
        assert_eq!(g.evaluate(0.9), 1.0);
        assert!((g.evaluate(1.0) - (1.0 - 2.0 / 3.0)).abs() < 1e-15);
    }
}
