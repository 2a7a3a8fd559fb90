//! ROI, payback, break-even thresholds, design-space sweeps and frontiers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{simulate_trajectory, Trajectory};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::scenario::PolicyConfig;

/// Upper end of the break-even search bracket.
pub const BREAKEVEN_GAMMA_MAX: f64 = 20.0;
/// Maximum bisection iterations.
pub const BREAKEVEN_MAX_ITER: usize = 80;
/// Absolute tolerance on the break-even gamma.
pub const BREAKEVEN_GAMMA_TOL: f64 = 1e-4;
/// Required |ROI| at the returned break-even point, percentage points.
pub const BREAKEVEN_ROI_TOL: f64 = 0.01;

/// ROI contour levels exported with every sweep.
pub const CONTOUR_LEVELS_SIGN: [f64; 3] = [-5.0, 0.0, 5.0];
pub const CONTOUR_LEVELS_EFFICIENCY: [f64; 3] = [0.0, 50.0, 100.0];

/// `((C_base - C_policy) / C_policy) * 100`.
pub fn roi(cost_baseline: f64, cost_policy: f64) -> Result<f64> {
    if !cost_baseline.is_finite() {
        return Err(Error::NonFinite("cost_baseline"));
    }
    if !cost_policy.is_finite() {
        return Err(Error::NonFinite("cost_policy"));
    }
    if cost_policy <= 0.0 {
        return Err(Error::NonPositiveCost(cost_policy));
    }
    Ok((cost_baseline - cost_policy) / cost_policy * 100.0)
}

/// ROI with a monetized health benefit credited to the savings.
pub fn monetized_roi(cost_baseline: f64, cost_policy: f64, health_benefit: f64) -> Result<f64> {
    if !health_benefit.is_finite() {
        return Err(Error::NonFinite("health_benefit"));
    }
    roi(cost_baseline + health_benefit, cost_policy)
}

/// Dollar value of averted health units.
pub fn monetize(units_averted: f64, value_per_unit: f64) -> f64 {
    units_averted * value_per_unit
}

/// First time the policy arm is strictly cheaper than the baseline arm,
/// linearly interpolated between the bracketing nodes.
pub fn payback_time(baseline: &Trajectory, policy: &Trajectory) -> Result<Option<f64>> {
    if !baseline.same_grid(policy) {
        return Err(Error::GridMismatch);
    }
    let diff = |i: usize| policy.cumulative_cost[i] - baseline.cumulative_cost[i];
    for i in 1..policy.len() {
        let d = diff(i);
        if d < 0.0 {
            let prev = diff(i - 1);
            if prev > 0.0 {
                let (t0, t1) = (policy.times[i - 1], policy.times[i]);
                return Ok(Some(t0 + (t1 - t0) * prev / (prev - d)));
            }
            return Ok(Some(policy.times[i]));
        }
    }
    Ok(None)
}

/// Baseline and policy costs at the horizon, with ROI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline_cost: f64,
    pub policy_cost: f64,
    pub roi_percent: f64,
}

/// The no-policy arm for `policy`: same stress and baseline-decay settings.
pub fn counterfactual(policy: &PolicyConfig) -> PolicyConfig {
    PolicyConfig {
        progression_compression: policy.progression_compression,
        baseline_decay: policy.baseline_decay,
        ..PolicyConfig::baseline()
    }
}

pub fn compare(params: &ModelParams, policy: &PolicyConfig) -> Result<Comparison> {
    let base = simulate_trajectory(params, &counterfactual(policy))?.final_cost();
    let cost = simulate_trajectory(params, policy)?.final_cost();
    Ok(Comparison { baseline_cost: base, policy_cost: cost, roi_percent: roi(base, cost)? })
}

/// ROI of `template` with the given gain and cost intensity.
pub fn roi_at(params: &ModelParams, template: &PolicyConfig, delta: f64, gamma: f64) -> Result<f64> {
    let policy = template.with_delta(delta).with_gamma(gamma);
    Ok(compare(params, &policy)?.roi_percent)
}

/// Largest cost intensity with non-negative ROI, by bracketing and bisection.
///
/// Returns `None` when ROI is already `<= 0` at `gamma = 0` or stays positive
/// up to [`BREAKEVEN_GAMMA_MAX`].
pub fn breakeven_gamma(params: &ModelParams, template: &PolicyConfig, delta: f64) -> Result<Option<f64>> {
    let eval = |g: f64| roi_at(params, template, delta, g);
    breakeven_by_bisection(eval)
}

fn breakeven_by_bisection(eval: impl Fn(f64) -> Result<f64>) -> Result<Option<f64>> {
    let at_zero = eval(0.0)?;
    if at_zero <= 0.0 {
        return Ok(None);
    }
    let (mut lo, mut roi_lo) = (0.0, at_zero);
    let mut hi = 0.5;
    let roi_hi = loop {
        let r = eval(hi)?;
        if r > roi_lo {
            return Err(Error::NonMonotone { gamma: hi });
        }
        if r <= 0.0 {
            break r;
        }
        if hi >= BREAKEVEN_GAMMA_MAX {
            return Ok(None);
        }
        lo = hi;
        roi_lo = r;
        hi = (hi * 2.0).min(BREAKEVEN_GAMMA_MAX);
    };
    let mut roi_hi = roi_hi;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..BREAKEVEN_MAX_ITER {
        mid = 0.5 * (lo + hi);
        let r = eval(mid)?;
        if r > roi_lo || r < roi_hi {
            return Err(Error::NonMonotone { gamma: mid });
        }
        if hi - lo < BREAKEVEN_GAMMA_TOL && r.abs() < BREAKEVEN_ROI_TOL {
            break;
        }
        if r > 0.0 {
            lo = mid;
            roi_lo = r;
        } else {
            hi = mid;
            roi_hi = r;
        }
    }
    Ok(Some(mid))
}

/// `dROI / dgamma` by central differences with `h = 0.01 max(gamma, 1)`,
/// falling back to a forward difference near zero.
pub fn roi_slope(params: &ModelParams, template: &PolicyConfig, delta: f64, gamma: f64) -> Result<f64> {
    let h = 0.01 * gamma.max(1.0);
    roi_slope_with_step(params, template, delta, gamma, h)
}

pub fn roi_slope_with_step(
    params: &ModelParams,
    template: &PolicyConfig,
    delta: f64,
    gamma: f64,
    h: f64,
) -> Result<f64> {
    let eval = |g: f64| roi_at(params, template, delta, g);
    if gamma - h < 0.0 {
        return Ok((eval(gamma + h)? - eval(gamma)?) / h);
    }
    Ok((eval(gamma + h)? - eval(gamma - h)?) / (2.0 * h))
}

/// Design-space sweep result over `(delta, gamma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiGrid {
    pub delta_axis: Vec<f64>,
    pub gamma_axis: Vec<f64>,
    /// `[delta][gamma]`.
    pub roi_percent: Vec<Vec<f64>>,
    /// Policy-arm `C(T)`, `[delta][gamma]`.
    pub total_cost: Vec<Vec<f64>>,
    pub breakeven_gamma_per_delta: Vec<Option<f64>>,
}

impl RoiGrid {
    /// Cells in row-major order: `(delta, gamma, roi, total_cost)`.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.delta_axis.iter().enumerate().flat_map(move |(i, &d)| {
            self.gamma_axis.iter().enumerate().map(move |(j, &g)| (d, g, self.roi_percent[i][j], self.total_cost[i][j]))
        })
    }
}

fn check_axis(name: &'static str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::InvalidAxis { name, reason: "must not be empty".into() });
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidAxis { name, reason: "values must be finite".into() });
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidAxis { name, reason: "must be strictly increasing".into() });
    }
    Ok(())
}

/// Evaluates every `(delta, gamma)` cell of `template`. Cells run in parallel;
/// each depends only on its own inputs, so the result equals a sequential sweep.
pub fn sweep_design_space(
    params: &ModelParams,
    template: &PolicyConfig,
    delta_axis: &[f64],
    gamma_axis: &[f64],
) -> Result<RoiGrid> {
    check_axis("delta", delta_axis)?;
    check_axis("gamma", gamma_axis)?;
    params.validate()?;
    template.validate_fields()?;

    let cells: Vec<(f64, f64)> = delta_axis.iter().flat_map(|&d| gamma_axis.iter().map(move |&g| (d, g))).collect();
    let results: Vec<(f64, f64)> = cells
        .par_iter()
        .map(|&(delta, gamma)| {
            let policy = template.with_delta(delta).with_gamma(gamma);
            compare(params, &policy).map(|c| (c.roi_percent, c.policy_cost)).map_err(|e| Error::SweepCell {
                delta,
                gamma,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let breakeven = delta_axis
        .par_iter()
        .map(|&delta| {
            breakeven_gamma(params, template, delta).map_err(|e| Error::SweepCell {
                delta,
                gamma: f64::NAN,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let cols = gamma_axis.len();
    let roi_percent = results.chunks(cols).map(|row| row.iter().map(|r| r.0).collect()).collect();
    let total_cost = results.chunks(cols).map(|row| row.iter().map(|r| r.1).collect()).collect();
    Ok(RoiGrid {
        delta_axis: delta_axis.to_vec(),
        gamma_axis: gamma_axis.to_vec(),
        roi_percent,
        total_cost,
        breakeven_gamma_per_delta: breakeven,
    })
}

/// One point on the cost-effectiveness plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub total_cost: f64,
    pub roi_percent: f64,
}

/// `a` dominates `b` when it is no more expensive, no worse in ROI, and
/// strictly better in at least one of the two.
pub fn dominates(a: &FrontierPoint, b: &FrontierPoint) -> bool {
    a.total_cost <= b.total_cost
        && a.roi_percent >= b.roi_percent
        && (a.total_cost < b.total_cost || a.roi_percent > b.roi_percent)
}

/// Pareto-nondominated cells (min cost, max ROI), sorted by ascending cost.
pub fn frontier(grid: &RoiGrid) -> Result<Vec<FrontierPoint>> {
    let mut points: Vec<FrontierPoint> =
        grid.cells().map(|(_, _, roi, cost)| FrontierPoint { total_cost: cost, roi_percent: roi }).collect();
    if points.is_empty() {
        return Err(Error::Empty("grid"));
    }
    points.sort_by(|a, b| a.total_cost.total_cmp(&b.total_cost).then(b.roi_percent.total_cmp(&a.roi_percent)));
    let mut out: Vec<FrontierPoint> = Vec::new();
    for p in points {
        match out.last() {
            Some(last) if p.roi_percent <= last.roi_percent => {}
            _ => out.push(p),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reported_roi() {
        let r = roi(3953.07, 3602.26).unwrap();
        assert_abs_diff_eq!(r, 9.7386, epsilon = 1e-4);
        assert_eq!(format!("{r:.1}"), "9.7");
    }

    #[test]
    fn roi_edge_cases() {
        assert_eq!(roi(1234.5, 1234.5).unwrap(), 0.0);
        assert_abs_diff_eq!(roi(3000.0, 4000.0).unwrap(), -25.0, epsilon = 1e-12);
        assert!(matches!(roi(1.0, 0.0), Err(Error::NonPositiveCost(_))));
        assert!(matches!(roi(1.0, -3.0), Err(Error::NonPositiveCost(_))));
    }

    #[test]
    fn monetized_roi_credits_benefit() {
        assert_eq!(monetized_roi(3953.07, 3602.26, 0.0).unwrap(), roi(3953.07, 3602.26).unwrap());
        let b = monetize(0.05, 50_000.0);
        assert_abs_diff_eq!(b, 2500.0, epsilon = 1e-9);
        // (3953.07 - 3602.26 + 2500) / 3602.26 = 79.139 %.
        assert_abs_diff_eq!(monetized_roi(3953.07, 3602.26, b).unwrap(), 79.1395, epsilon = 1e-3);
        assert!(monetized_roi(1.0, 0.0, 5.0).is_err());
    }

    #[test]
    fn bisection_on_a_known_line() {
        // ROI(g) = 10 - 4 g crosses zero at 2.5.
        let g = breakeven_by_bisection(|g| Ok(10.0 - 4.0 * g)).unwrap().unwrap();
        assert_abs_diff_eq!(g, 2.5, epsilon = BREAKEVEN_GAMMA_TOL);
        assert!(breakeven_by_bisection(|_| Ok(-1.0)).unwrap().is_none());
        assert!(breakeven_by_bisection(|g| Ok(100.0 - g)).unwrap().is_none());
        assert!(matches!(
            breakeven_by_bisection(|g| Ok(if g > 0.7 { 5.0 + g } else { 1.0 })),
            Err(Error::NonMonotone { .. })
        ));
    }

    fn point(c: f64, r: f64) -> FrontierPoint {
        FrontierPoint { total_cost: c, roi_percent: r }
    }

    fn grid_of(points: &[(f64, f64)]) -> RoiGrid {
        RoiGrid {
            delta_axis: vec![0.1],
            gamma_axis: (0..points.len()).map(|i| i as f64).collect(),
            roi_percent: vec![points.iter().map(|p| p.1).collect()],
            total_cost: vec![points.iter().map(|p| p.0).collect()],
            breakeven_gamma_per_delta: vec![None],
        }
    }

    #[test]
    fn frontier_cases() {
        assert_eq!(frontier(&grid_of(&[(10.0, 1.0)])).unwrap(), vec![point(10.0, 1.0)]);
        assert_eq!(frontier(&grid_of(&[(10.0, 1.0), (12.0, 0.5)])).unwrap(), vec![point(10.0, 1.0)]);
        assert_eq!(
            frontier(&grid_of(&[(12.0, 3.0), (10.0, 1.0), (11.0, 1.0), (13.0, 2.0)])).unwrap(),
            vec![point(10.0, 1.0), point(12.0, 3.0)]
        );
        let empty = RoiGrid {
            delta_axis: vec![],
            gamma_axis: vec![],
            roi_percent: vec![],
            total_cost: vec![],
            breakeven_gamma_per_delta: vec![],
        };
        assert!(matches!(frontier(&empty), Err(Error::Empty(_))));
    }

    #[test]
    fn payback_identical_is_none() {
        let t = Trajectory {
            times: vec![0.0, 1.0, 2.0],
            adherence: vec![0.5; 3],
            severity: vec![0.1; 3],
            policy_cost: vec![0.0; 3],
            instantaneous_cost: vec![1.0; 3],
            cumulative_cost: vec![1.0, 2.0, 3.0],
            nudges: Default::default(),
        };
        assert_eq!(payback_time(&t, &t).unwrap(), None);
        let mut p = t.clone();
        p.cumulative_cost = vec![1.0, 2.5, 2.5];
        // diff 0.5 at t=1, -0.5 at t=2 -> crossing at 1.5.
        assert_eq!(payback_time(&t, &p).unwrap(), Some(1.5));
        p.cumulative_cost = vec![1.0, 1.5, 2.5];
        assert_eq!(payback_time(&t, &p).unwrap(), Some(1.0));
        let mut q = t.clone();
        q.times = vec![0.0, 1.0, 2.5];
        assert!(matches!(payback_time(&t, &q), Err(Error::GridMismatch)));
    }

    #[test]
    fn axes_are_validated() {
        let p = ModelParams::reference();
        let t = crate::scenario::build_preset("early_adherence").unwrap();
        assert!(sweep_design_space(&p, &t, &[], &[1.0]).is_err());
        assert!(sweep_design_space(&p, &t, &[0.2, 0.1], &[1.0]).is_err());
        assert!(sweep_design_space(&p, &t, &[0.2], &[1.0, 1.0]).is_err());
    }
}
