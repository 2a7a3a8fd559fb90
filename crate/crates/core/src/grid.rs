use crate::error::{Error, Result};

/// Default quadrature / integration step, in years.
pub const DEFAULT_STEP: f64 = 0.01;

/// Uniform time grid `0 = t_0 < ... < t_n = horizon`.
///
/// Node times are computed as `horizon * i / n` so that round multiples of the
/// step (policy start times, window ends) land exactly on nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    /// Grid over `[0, horizon]` whose step is the largest value `<= step` that
    /// divides the horizon evenly.
    pub fn new(horizon: f64, step: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter { name: "horizon_T", reason: "must be > 0".into() });
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter { name: "step", reason: "must be > 0".into() });
        }
        let steps = ((horizon / step) - 1e-9).ceil().max(1.0) as usize;
        Ok(Self { horizon, steps })
    }

    pub fn with_steps(horizon: f64, steps: usize) -> Self {
        assert!(steps > 0 && horizon > 0.0);
        Self { horizon, steps }
    }

    pub fn default_for(horizon: f64) -> Result<Self> {
        Self::new(horizon, DEFAULT_STEP)
    }

    /// Same horizon, half the step.
    pub fn refined(&self) -> Self {
        Self { horizon: self.horizon, steps: self.steps * 2 }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            self.horizon * i as f64 / self.steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.time(i)).collect()
    }

    /// Index of the first node with `t_i >= t` (within rounding), or `None`
    /// when `t` lies beyond the horizon.
    pub fn first_node_at_or_after(&self, t: f64) -> Option<usize> {
        if t <= 0.0 {
            return Some(0);
        }
        let tol = 1e-9 * self.step();
        let raw = ((t - tol) / self.step()).ceil();
        if raw > self.steps as f64 {
            return None;
        }
        let mut i = raw.max(0.0) as usize;
        while i > 0 && self.time(i - 1) >= t - tol {
            i -= 1;
        }
        while i <= self.steps && self.time(i) < t - tol {
            i += 1;
        }
        (i <= self.steps).then_some(i)
    }

    /// Number of whole steps closest to `duration`.
    pub fn steps_for(&self, duration: f64) -> usize {
        (duration / self.step()).round().max(0.0) as usize
    }

    /// Step index `i` with `t_i <= t < t_{i+1}`; the final node maps to the last step.
    pub fn step_containing(&self, t: f64) -> usize {
        let raw = (t / self.step()).floor();
        let mut i = raw.clamp(0.0, (self.steps - 1) as f64) as usize;
        if i + 1 < self.steps && self.time(i + 1) <= t {
            i += 1;
        }
        if i > 0 && self.time(i) > t {
            i -= 1;
        }
        i
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::NonFinite("t"));
        }
        if t < 0.0 || t > self.horizon {
            return Err(Error::TimeOutOfRange { t, horizon: self.horizon });
        }
        Ok(())
    }
}
