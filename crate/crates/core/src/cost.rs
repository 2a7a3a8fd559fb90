//! Instantaneous cost, discounting and cumulative cost along a trajectory.

use serde::{Deserialize, Serialize};

use crate::disease::{rk4_increment, DiseaseCurve};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::params::ModelParams;
use crate::scenario::{NudgeLog, PolicyConfig, PolicySchedule};

/// Aligned time series for one simulated policy arm.
///
/// Node values are right-continuous: at a policy start or nudge activation
/// the arrays already hold the post-jump value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub adherence: Vec<f64>,
    pub severity: Vec<f64>,
    /// Unscaled policy expenditure `P(s)`.
    pub policy_cost: Vec<f64>,
    /// `c(s)` in dollars per year.
    pub instantaneous_cost: Vec<f64>,
    /// `C(t)` in dollars.
    pub cumulative_cost: Vec<f64>,
    pub nudges: NudgeLog,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_cost(&self) -> f64 {
        *self.cumulative_cost.last().expect("trajectory is never empty")
    }

    pub fn final_severity(&self) -> f64 {
        *self.severity.last().expect("trajectory is never empty")
    }

    pub fn final_adherence(&self) -> f64 {
        *self.adherence.last().expect("trajectory is never empty")
    }

    pub fn same_grid(&self, other: &Trajectory) -> bool {
        self.times == other.times
    }
}

/// `c = alpha D + beta A^2 + gamma U P + lambda H`, where `U` is the
/// `policy_cost_unit` of `params`.
pub fn instantaneous_cost(
    params: &ModelParams,
    adherence: f64,
    policy_cost: f64,
    health: f64,
    severity: f64,
    gamma: f64,
) -> Result<f64> {
    for (name, v) in [
        ("adherence", adherence),
        ("policy_cost", policy_cost),
        ("health", health),
        ("severity", severity),
        ("gamma", gamma),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    if !(0.0..=1.0).contains(&adherence) {
        return Err(Error::InvalidParameter { name: "adherence", reason: format!("{adherence} is outside [0, 1]") });
    }
    Ok(cost_terms(params, adherence, policy_cost, health, severity, gamma))
}

#[inline]
fn cost_terms(p: &ModelParams, a: f64, pc: f64, h: f64, d: f64, gamma: f64) -> f64 {
    p.disease_cost * d + p.adherence_cost * a * a + gamma * p.policy_cost_unit * pc + p.health_weight * h
}

/// Health-outcome rate fed to the `lambda` term: the current severity.
#[inline]
fn health_outcome(severity: f64) -> f64 {
    severity
}

struct Run {
    trajectory: Trajectory,
    schedule: PolicySchedule,
    curve: DiseaseCurve,
    excess: Vec<f64>,
    gamma: f64,
}

fn run_on(params: &ModelParams, policy: &PolicyConfig, grid: TimeGrid) -> Run {
    let n = grid.steps();
    let h = grid.step();
    let schedule = PolicySchedule::new(params, policy, grid);
    let curve = DiseaseCurve::new(params, policy.progression_compression);
    let gamma = policy.effective_gamma();
    let rho = params.discount_rate;

    let times = grid.times();
    let mut adherence = Vec::with_capacity(n + 1);
    let mut severity = Vec::with_capacity(n + 1);
    let mut policy_cost = Vec::with_capacity(n + 1);
    let mut inst = Vec::with_capacity(n + 1);
    let mut cumulative = Vec::with_capacity(n + 1);
    let mut excess = Vec::with_capacity(n + 1);

    let mut x = 0.0;
    let mut d = curve.closed_form(0.0);
    let mut total = 0.0;
    for i in 0..=n {
        let t = times[i];
        let a = schedule.adherence_node(i);
        let pc = schedule.policy_cost_step(i);
        let c = cost_terms(params, a, pc, health_outcome(d), d, gamma);
        adherence.push(a);
        severity.push(d);
        policy_cost.push(pc);
        inst.push(c);
        excess.push(x);
        cumulative.push(params.baseline_cost + total);
        if i == n {
            break;
        }

        let t_next = times[i + 1];
        x += rk4_increment(h, t, |u| schedule.excess_in_step(i, u));
        let d_next = curve.with_excess(t_next, x);
        let a_left = schedule.adherence_left(i + 1);
        let c_left = cost_terms(params, a_left, pc, health_outcome(d_next), d_next, gamma);
        total += 0.5 * h * ((-rho * t).exp() * c + (-rho * t_next).exp() * c_left);
        d = d_next;
    }

    let nudges = schedule.nudge_log();
    Run {
        trajectory: Trajectory {
            times,
            adherence,
            severity,
            policy_cost,
            instantaneous_cost: inst,
            cumulative_cost: cumulative,
            nudges,
        },
        schedule,
        curve,
        excess,
        gamma,
    }
}

/// Simulates one policy arm on the default 0.01-year grid.
pub fn simulate_trajectory(params: &ModelParams, policy: &PolicyConfig) -> Result<Trajectory> {
    let grid = TimeGrid::default_for(params.horizon)?;
    simulate_trajectory_on(params, policy, grid)
}

pub fn simulate_trajectory_on(params: &ModelParams, policy: &PolicyConfig, grid: TimeGrid) -> Result<Trajectory> {
    params.validate()?;
    policy.validate(params)?;
    check_grid(params, &grid)?;
    Ok(run_on(params, policy, grid).trajectory)
}

/// Like [`simulate_trajectory_on`] but without the `A0 + delta <= 1` ceiling;
/// adherence is clamped to `[0, 1]` instead. Used for sampled gains.
pub(crate) fn simulate_clamped(params: &ModelParams, policy: &PolicyConfig, grid: TimeGrid) -> Result<Trajectory> {
    params.validate()?;
    policy.validate_fields()?;
    policy.validate_trigger(params)?;
    check_grid(params, &grid)?;
    Ok(run_on(params, policy, grid).trajectory)
}

fn check_grid(params: &ModelParams, grid: &TimeGrid) -> Result<()> {
    if (grid.horizon() - params.horizon).abs() > 1e-12 {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `C(t) = C0 + integral_0^t e^{-rho s} c(s) ds` on the default grid.
pub fn cumulative_cost(params: &ModelParams, policy: &PolicyConfig, t: f64) -> Result<f64> {
    let grid = TimeGrid::default_for(params.horizon)?;
    cumulative_cost_on(params, policy, t, grid)
}

pub fn cumulative_cost_on(params: &ModelParams, policy: &PolicyConfig, t: f64, grid: TimeGrid) -> Result<f64> {
    params.validate()?;
    policy.validate(params)?;
    check_grid(params, &grid)?;
    grid.check_time(t)?;
    let run = run_on(params, policy, grid);
    let i = grid.step_containing(t);
    let t_i = grid.time(i);
    if t == t_i {
        return Ok(run.trajectory.cumulative_cost[i]);
    }
    if t == grid.time(i + 1) {
        return Ok(run.trajectory.cumulative_cost[i + 1]);
    }
    // Partial trapezoid over [t_i, t] using the smooth piece of step i.
    let dt = t - t_i;
    let x = run.excess[i] + rk4_increment(dt, t_i, |u| run.schedule.excess_in_step(i, u));
    let d = run.curve.with_excess(t, x);
    let a = run.schedule.adherence_in_step(i, t);
    let pc = run.schedule.policy_cost_step(i);
    let c = cost_terms(params, a, pc, health_outcome(d), d, run.gamma);
    let rho = params.discount_rate;
    let left = (-rho * t_i).exp() * run.trajectory.instantaneous_cost[i];
    Ok(run.trajectory.cumulative_cost[i] + 0.5 * dt * (left + (-rho * t).exp() * c))
}
