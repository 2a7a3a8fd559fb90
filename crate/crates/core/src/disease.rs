//! Logistic disease progression with optional adherence coupling.
//!
//! Severity follows `dD/ds = k (1 - eta * max(0, A(s) - A0)) D (1 - D / Dmax)`
//! from `D(0) = Dmax / (1 + e^{k s0})`. In log-odds `L = ln(D / (Dmax - D))`
//! this is `dL/ds = k (1 - eta * excess(s))`, so
//!
//! ```text
//! L(s) = k (s - s0) - k * eta * X(s),    X(s) = integral_0^s excess(u) du
//! ```
//!
//! `X` is advanced with classical RK4 on the simulation grid. When the excess
//! is identically zero `X` stays exactly 0 and the closed-form logistic is
//! reproduced bit for bit.

use crate::error::{Error, Result};
use crate::grid::{TimeGrid, DEFAULT_STEP};
use crate::params::ModelParams;

/// Disease clock after the progression-compression stress.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiseaseCurve {
    pub max: f64,
    pub steepness: f64,
    pub midpoint: f64,
    pub coupling: f64,
}

impl DiseaseCurve {
    /// Compression `c` runs the curve at `s / c`: `k -> k / c`, `s0 -> c s0`.
    pub fn new(params: &ModelParams, compression: f64) -> Self {
        Self {
            max: params.disease_max,
            steepness: params.disease_steepness / compression,
            midpoint: params.disease_midpoint * compression,
            coupling: params.severity_coupling,
        }
    }

    pub fn closed_form(&self, s: f64) -> f64 {
        self.max / (1.0 + (-self.steepness * (s - self.midpoint)).exp())
    }

    /// Severity given the accumulated excess adherence `X(s)`.
    pub fn with_excess(&self, s: f64, accumulated_excess: f64) -> f64 {
        if accumulated_excess == 0.0 || self.coupling == 0.0 {
            return self.closed_form(s);
        }
        let log_odds = self.steepness * (s - self.midpoint) - self.steepness * self.coupling * accumulated_excess;
        self.max / (1.0 + (-log_odds).exp())
    }
}

/// One RK4 step of `dX/ds = f(s)`; `f` must be smooth on `[s, s + h]`.
pub(crate) fn rk4_increment(h: f64, s: f64, f: impl Fn(f64) -> f64) -> f64 {
    let k1 = f(s);
    let k2 = f(s + 0.5 * h);
    let k3 = k2;
    let k4 = f(s + h);
    h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Severity at time `s` under an arbitrary adherence trajectory.
///
/// With `eta = 0` the closed-form logistic is returned directly.
pub fn disease_severity(params: &ModelParams, adherence: impl Fn(f64) -> f64, s: f64) -> Result<f64> {
    params.validate()?;
    let grid = TimeGrid::new(params.horizon, DEFAULT_STEP)?;
    grid.check_time(s)?;
    let curve = DiseaseCurve::new(params, 1.0);
    if params.severity_coupling == 0.0 {
        return Ok(curve.closed_form(s));
    }
    let a0 = params.adherence_baseline;
    let h = grid.step();
    let mut x = 0.0;
    let mut t = 0.0;
    while s - t > 1e-12 {
        let step = h.min(s - t);
        let [a, m, b] = [t, t + 0.5 * step, t + step].map(&adherence);
        if !(a.is_finite() && m.is_finite() && b.is_finite()) {
            return Err(Error::NonFinite("adherence"));
        }
        x += rk4_increment(step, t, |u| (adherence(u) - a0).max(0.0));
        t += step;
    }
    Ok(curve.with_excess(s, x))
}
