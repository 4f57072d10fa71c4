use super::SurvivalError;

/// Right-continuous nonincreasing step function on `[0, ∞)` starting at 1,
/// as produced by the Kaplan-Meier estimator.
///
/// The function equals 1 before the first jump; `values[i]` is the value on
/// `[jump_times[i], jump_times[i+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    jump_times: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(jump_times: Vec<f64>, values: Vec<f64>) -> Result<Self, SurvivalError> {
        if jump_times.len() != values.len() {
            return Err(SurvivalError::InvalidStepFunction(format!(
                "{} jump times but {} values",
                jump_times.len(),
                values.len()
            )));
        }
        let mut prev_t = 0.0;
        let mut prev_v = 1.0;
        for (&t, &v) in jump_times.iter().zip(&values) {
            if !(t > prev_t) || !t.is_finite() {
                return Err(SurvivalError::InvalidStepFunction(format!(
                    "jump times must be strictly increasing and positive, got {t}"
                )));
            }
            if !(0.0..=1.0).contains(&v) || v > prev_v {
                return Err(SurvivalError::InvalidStepFunction(format!(
                    "values must be nonincreasing within [0, 1], got {v} after {prev_v}"
                )));
            }
            prev_t = t;
            prev_v = v;
        }
        Ok(StepFunction { jump_times, values })
    }

    /// Constant function 1 (no jumps).
    pub fn one() -> Self {
        StepFunction { jump_times: Vec::new(), values: Vec::new() }
    }

    /// Right-continuous evaluation `G(t)`.
    pub fn evaluate(&self, t: f64) -> f64 {
        let idx = self.jump_times.partition_point(|&jt| jt <= t);
        if idx == 0 {
            1.0
        } else {
            self.values[idx - 1]
        }
    }

    /// Left limit `G(t-)`, the value just before any jump at `t`.
    pub fn evaluate_left(&self, t: f64) -> f64 {
        let idx = self.jump_times.partition_point(|&jt| jt < t);
        if idx == 0 {
            1.0
        } else {
            self.values[idx - 1]
        }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_right_continuously() {
        let g = StepFunction::new(vec![1.0, 2.0], vec![0.75, 0.375]).unwrap();
        assert_eq!(g.evaluate(0.0), 1.0);
        assert_eq!(g.evaluate(0.99), 1.0);
        assert_eq!(g.evaluate(1.0), 0.75);
        assert_eq!(g.evaluate(1.5), 0.75);
        assert_eq!(g.evaluate(2.0), 0.375);
        assert_eq!(g.evaluate(100.0), 0.375);
    }

    #[test]
    fn left_limits() {
        let g = StepFunction::new(vec![1.0, 2.0], vec![0.75, 0.375]).unwrap();
        assert_eq!(g.evaluate_left(0.5), 1.0);
        assert_eq!(g.evaluate_left(1.0), 1.0);
        assert_eq!(g.evaluate_left(1.5), 0.75);
        assert_eq!(g.evaluate_left(2.0), 0.75);
        assert_eq!(g.evaluate_left(2.5), 0.375);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(StepFunction::new(vec![1.0, 1.0], vec![0.5, 0.25]).is_err());
        assert!(StepFunction::new(vec![1.0, 2.0], vec![0.5, 0.75]).is_err());
        assert!(StepFunction::new(vec![-1.0], vec![0.5]).is_err());
        assert!(StepFunction::new(vec![1.0], vec![1.5]).is_err());
    }
}
