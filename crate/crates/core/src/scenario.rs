//! Policy archetypes: adherence trajectories `A(s)`, expenditure functions
//! `P(s)`, the adaptive-nudge state machine and the stress transforms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::params::ModelParams;

/// Length of the cost window opened by each nudge activation, years.
pub const NUDGE_WINDOW_YEARS: f64 = 0.5;
/// Default `P(s)` increment per open nudge window.
pub const DEFAULT_NUDGE_UNIT_COST: f64 = 0.5;
/// Default decay rate of the regressive archetype, per year.
pub const DEFAULT_REGRESSIVE_DECAY: f64 = 0.5;
/// Default erosion rate of the decaying-baseline counterfactual, per year.
pub const DEFAULT_BASELINE_DECAY: f64 = 0.05;
/// Decay rate between re-engagements in the adaptive-nudge preset, per year.
pub const ADAPTIVE_PRESET_DECAY: f64 = 0.06;
/// Re-engagement trigger level of the adaptive-nudge preset.
pub const ADAPTIVE_PRESET_THRESHOLD: f64 = 0.81;
/// Reference cost-inflation stress factor.
pub const REFERENCE_INFLATION: f64 = 1.20;
/// Reference progression-compression stress factor.
pub const REFERENCE_COMPRESSION: f64 = 0.85;

/// Canonical preset names, in presentation order.
pub const PRESET_NAMES: [&str; 6] =
    ["baseline", "early_adherence", "delayed", "regressive", "adaptive_nudges", "low_impact"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Baseline,
    EarlyAdherence,
    Delayed,
    Regressive,
    AdaptiveNudges,
    LowImpact,
    /// Step-and-decay form `A0 + delta * exp(-theta (s - tau)) I(s - tau)`;
    /// `theta = 0` gives a plain step.
    Custom,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Baseline => "baseline",
            ScenarioKind::EarlyAdherence => "early_adherence",
            ScenarioKind::Delayed => "delayed",
            ScenarioKind::Regressive => "regressive",
            ScenarioKind::AdaptiveNudges => "adaptive_nudges",
            ScenarioKind::LowImpact => "low_impact",
            ScenarioKind::Custom => "custom",
        }
    }

    fn decays(self) -> bool {
        matches!(self, ScenarioKind::Regressive | ScenarioKind::AdaptiveNudges | ScenarioKind::Custom)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One policy design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: ScenarioKind,
    #[serde(default)]
    pub start_tau: f64,
    #[serde(default)]
    pub adherence_gain_delta: f64,
    #[serde(default)]
    pub cost_scale_gamma: f64,
    #[serde(default)]
    pub decay_theta: f64,
    #[serde(default)]
    pub nudge_threshold: f64,
    #[serde(default = "default_nudge_unit_cost")]
    pub nudge_unit_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_decay: Option<f64>,
    #[serde(default = "one")]
    pub inflation_factor: f64,
    #[serde(default = "one")]
    pub progression_compression: f64,
}

fn one() -> f64 {
    1.0
}

fn default_nudge_unit_cost() -> f64 {
    DEFAULT_NUDGE_UNIT_COST
}

/// Stress transform applied to a policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stress {
    /// Multiplies the effective policy cost intensity (must be >= 1).
    CostInflation(f64),
    /// Runs the disease clock faster by `1 / compression` (must lie in (0, 1]).
    AcceleratedProgression(f64),
}

impl PolicyConfig {
    pub fn baseline() -> Self {
        Self {
            kind: ScenarioKind::Baseline,
            start_tau: 0.0,
            adherence_gain_delta: 0.0,
            cost_scale_gamma: 0.0,
            decay_theta: 0.0,
            nudge_threshold: 0.0,
            nudge_unit_cost: DEFAULT_NUDGE_UNIT_COST,
            baseline_decay: None,
            inflation_factor: 1.0,
            progression_compression: 1.0,
        }
    }

    fn step(kind: ScenarioKind, tau: f64, delta: f64, gamma: f64) -> Self {
        Self { kind, start_tau: tau, adherence_gain_delta: delta, cost_scale_gamma: gamma, ..Self::baseline() }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.adherence_gain_delta = delta;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.cost_scale_gamma = gamma;
        self
    }

    pub fn with_baseline_decay(mut self, rate: Option<f64>) -> Self {
        self.baseline_decay = rate;
        self
    }

    /// `gamma` after the inflation stress.
    pub fn effective_gamma(&self) -> f64 {
        self.cost_scale_gamma * self.inflation_factor
    }

    /// Range checks on every field, independent of the model parameters.
    pub fn validate_fields(&self) -> Result<()> {
        let fields: [(&'static str, f64); 8] = [
            ("start_tau", self.start_tau),
            ("adherence_gain_delta", self.adherence_gain_delta),
            ("cost_scale_gamma", self.cost_scale_gamma),
            ("decay_theta", self.decay_theta),
            ("nudge_threshold", self.nudge_threshold),
            ("nudge_unit_cost", self.nudge_unit_cost),
            ("inflation_factor", self.inflation_factor),
            ("progression_compression", self.progression_compression),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::NonFinite(name));
            }
        }
        let check = |ok: bool, name: &'static str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidPolicy { name, reason: reason.to_string() })
            }
        };
        check(self.start_tau >= 0.0, "start_tau", "must be >= 0")?;
        check((0.0..=1.0).contains(&self.adherence_gain_delta), "adherence_gain_delta", "must lie in [0, 1]")?;
        check(self.cost_scale_gamma >= 0.0, "cost_scale_gamma", "must be >= 0")?;
        check(self.decay_theta >= 0.0, "decay_theta", "must be >= 0")?;
        check((0.0..=1.0).contains(&self.nudge_threshold), "nudge_threshold", "must lie in [0, 1]")?;
        check(self.nudge_unit_cost >= 0.0, "nudge_unit_cost", "must be >= 0")?;
        if let Some(rate) = self.baseline_decay {
            if !rate.is_finite() {
                return Err(Error::NonFinite("baseline_decay"));
            }
            check(rate >= 0.0, "baseline_decay", "must be >= 0")?;
        }
        check(self.inflation_factor >= 1.0, "inflation_factor", "must be >= 1")?;
        check(
            self.progression_compression > 0.0 && self.progression_compression <= 1.0,
            "progression_compression",
            "must lie in (0, 1]",
        )?;
        Ok(())
    }

    /// Field ranges plus the invariants that involve the baseline adherence.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        self.validate_fields()?;
        let peak = params.adherence_baseline + self.adherence_gain_delta;
        if peak > 1.0 + 1e-12 {
            return Err(Error::InvalidPolicy {
                name: "adherence_gain_delta",
                reason: format!("A0 + delta = {peak} exceeds 1"),
            });
        }
        self.validate_trigger(params)
    }

    /// The nudge trigger must sit strictly below the boosted level.
    pub(crate) fn validate_trigger(&self, params: &ModelParams) -> Result<()> {
        let peak = params.adherence_baseline + self.adherence_gain_delta;
        if self.kind == ScenarioKind::AdaptiveNudges && self.nudge_threshold >= peak {
            return Err(Error::InvalidPolicy {
                name: "nudge_threshold",
                reason: format!("must be below A0 + delta = {peak}"),
            });
        }
        Ok(())
    }
}

/// Returns the Table-style preset for a canonical scenario name.
pub fn build_preset(name: &str) -> Result<PolicyConfig> {
    let preset = match name {
        "baseline" => PolicyConfig::baseline(),
        "early_adherence" => PolicyConfig::step(ScenarioKind::EarlyAdherence, 2.0, 0.3, 1.5),
        "delayed" => PolicyConfig::step(ScenarioKind::Delayed, 5.0, 0.3, 1.5),
        "regressive" => PolicyConfig {
            decay_theta: DEFAULT_REGRESSIVE_DECAY,
            ..PolicyConfig::step(ScenarioKind::Regressive, 2.0, 0.3, 1.2)
        },
        "adaptive_nudges" => PolicyConfig {
            decay_theta: ADAPTIVE_PRESET_DECAY,
            nudge_threshold: ADAPTIVE_PRESET_THRESHOLD,
            ..PolicyConfig::step(ScenarioKind::AdaptiveNudges, 2.0, 0.3, 2.0)
        },
        "low_impact" => PolicyConfig::step(ScenarioKind::LowImpact, 2.0, 0.05, 3.0),
        other => return Err(Error::UnknownScenario { name: other.to_string(), valid: PRESET_NAMES.join(", ") }),
    };
    Ok(preset)
}

impl FromStr for PolicyConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        build_preset(s)
    }
}

/// Applies one stress transform. Inflation and compression touch disjoint
/// fields, so the transforms commute.
pub fn apply_stress(policy: &PolicyConfig, stress: Stress) -> Result<PolicyConfig> {
    let mut out = *policy;
    match stress {
        Stress::CostInflation(factor) => {
            if !(factor.is_finite() && factor >= 1.0) {
                return Err(Error::InvalidPolicy {
                    name: "inflation_factor",
                    reason: format!("stress factor {factor} must be >= 1"),
                });
            }
            out.inflation_factor = factor;
        }
        Stress::AcceleratedProgression(compression) => {
            if !(compression.is_finite() && compression > 0.0 && compression <= 1.0) {
                return Err(Error::InvalidPolicy {
                    name: "progression_compression",
                    reason: format!("compression {compression} must lie in (0, 1]"),
                });
            }
            out.progression_compression = compression;
        }
    }
    Ok(out)
}

/// Sequence of adaptive re-engagements.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NudgeLog {
    pub activation_times: Vec<f64>,
    pub count: usize,
}

impl NudgeLog {
    pub fn empty() -> Self {
        Self::default()
    }

    fn from_times(activation_times: Vec<f64>) -> Self {
        let count = activation_times.len();
        Self { activation_times, count }
    }

    /// Number of cost windows open at time `s`.
    pub fn open_windows(&self, s: f64) -> usize {
        let tol = 1e-9;
        self.activation_times.iter().filter(|&&t| t <= s + tol && s < t + NUDGE_WINDOW_YEARS - tol).count()
    }
}

/// Policy schedule resolved onto a time grid.
///
/// Discontinuities (policy start, nudge activations, window ends) sit on grid
/// nodes. Node values are right-continuous; [`PolicySchedule::adherence_in_step`]
/// gives the smooth piece on `[t_i, t_{i+1}]`, whose right end is the left
/// limit at `t_{i+1}`.
#[derive(Debug, Clone)]
pub struct PolicySchedule {
    grid: TimeGrid,
    kind: ScenarioKind,
    baseline: f64,
    baseline_decay: Option<f64>,
    delta: f64,
    theta: f64,
    nudge_unit_cost: f64,
    start: Option<usize>,
    activations: Vec<usize>,
    window_steps: usize,
    /// Reset anchor in force on each step (node index), if the policy is active.
    anchors: Vec<Option<usize>>,
    /// Number of open nudge windows on each step.
    open: Vec<u32>,
}

impl PolicySchedule {
    /// Resolves `policy` on `grid`. Callers validate the policy first.
    pub fn new(params: &ModelParams, policy: &PolicyConfig, grid: TimeGrid) -> Self {
        let kind = policy.kind;
        let start = if kind == ScenarioKind::Baseline { None } else { grid.first_node_at_or_after(policy.start_tau) };
        let theta = if kind.decays() { policy.decay_theta } else { 0.0 };
        let mut schedule = Self {
            grid,
            kind,
            baseline: params.adherence_baseline,
            baseline_decay: policy.baseline_decay,
            delta: if kind == ScenarioKind::Baseline { 0.0 } else { policy.adherence_gain_delta },
            theta,
            nudge_unit_cost: policy.nudge_unit_cost,
            start,
            activations: Vec::new(),
            window_steps: grid.steps_for(NUDGE_WINDOW_YEARS),
            anchors: vec![None; grid.len()],
            open: vec![0; grid.len()],
        };

        let Some(start) = start else {
            return schedule;
        };
        let mut anchor = start;
        for i in start..grid.len() {
            if kind == ScenarioKind::AdaptiveNudges && i > start {
                let value = schedule.raw_adherence(grid.time(i), Some(anchor));
                if value < policy.nudge_threshold {
                    schedule.activations.push(i);
                    anchor = i;
                }
            }
            schedule.anchors[i] = Some(anchor);
        }
        for &a in &schedule.activations {
            let end = (a + schedule.window_steps).min(grid.len());
            for slot in &mut schedule.open[a..end] {
                *slot += 1;
            }
        }
        schedule
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Node at which the policy switches on, if it does within the horizon.
    pub fn start_index(&self) -> Option<usize> {
        self.start
    }

    fn base_level(&self, s: f64) -> f64 {
        match self.baseline_decay {
            Some(rate) => self.baseline * (-rate * s).exp(),
            None => self.baseline,
        }
    }

    fn raw_adherence(&self, s: f64, anchor: Option<usize>) -> f64 {
        let boost = match anchor {
            Some(a) if self.theta > 0.0 => self.delta * (-self.theta * (s - self.grid.time(a))).exp(),
            Some(_) => self.delta,
            None => 0.0,
        };
        self.base_level(s) + boost
    }

    /// Adherence on step `i` evaluated at `s` in `[t_i, t_{i+1}]`.
    pub fn adherence_in_step(&self, i: usize, s: f64) -> f64 {
        self.raw_adherence(s, self.anchors[i]).clamp(0.0, 1.0)
    }

    /// Right-continuous node value.
    pub fn adherence_node(&self, i: usize) -> f64 {
        self.adherence_in_step(i, self.grid.time(i))
    }

    /// Left limit at node `i >= 1`.
    pub fn adherence_left(&self, i: usize) -> f64 {
        self.adherence_in_step(i - 1, self.grid.time(i))
    }

    /// Policy expenditure `P` on step `i` (constant within the step).
    pub fn policy_cost_step(&self, i: usize) -> f64 {
        if self.anchors[i].is_none() {
            return 0.0;
        }
        1.0 + self.nudge_unit_cost * self.open[i] as f64
    }

    /// Excess adherence above `A0` on step `i`, the quantity that slows progression.
    pub fn excess_in_step(&self, i: usize, s: f64) -> f64 {
        (self.adherence_in_step(i, s) - self.baseline).max(0.0)
    }

    pub fn nudge_log(&self) -> NudgeLog {
        NudgeLog::from_times(self.activations.iter().map(|&i| self.grid.time(i)).collect())
    }

    pub fn kind(&self) -> ScenarioKind {
        self.kind
    }
}

/// `A(s)` for one policy.
pub fn adherence_at(params: &ModelParams, policy: &PolicyConfig, s: f64) -> Result<f64> {
    params.validate()?;
    policy.validate(params)?;
    let grid = TimeGrid::default_for(params.horizon)?;
    grid.check_time(s)?;

    let base = match policy.baseline_decay {
        Some(rate) => params.adherence_baseline * (-rate * s).exp(),
        None => params.adherence_baseline,
    };
    let tau = policy.start_tau;
    let delta = policy.adherence_gain_delta;
    let value = match policy.kind {
        ScenarioKind::Baseline => base,
        ScenarioKind::EarlyAdherence | ScenarioKind::Delayed | ScenarioKind::LowImpact => {
            if s >= tau {
                base + delta
            } else {
                base
            }
        }
        ScenarioKind::Regressive | ScenarioKind::Custom => {
            if s >= tau {
                base + delta * (-policy.decay_theta * (s - tau)).exp()
            } else {
                base
            }
        }
        ScenarioKind::AdaptiveNudges => {
            if s < tau {
                base
            } else {
                let log = compute_nudge_log(params, policy)?;
                let anchor = log.activation_times.iter().copied().rev().find(|&t| t <= s).unwrap_or(tau);
                base + delta * (-policy.decay_theta * (s - anchor)).exp()
            }
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

/// `P(s)` before scaling by `gamma`.
pub fn policy_cost_at(policy: &PolicyConfig, nudges: &NudgeLog, s: f64) -> Result<f64> {
    policy.validate_fields()?;
    if !s.is_finite() {
        return Err(Error::NonFinite("s"));
    }
    if s < 0.0 {
        return Err(Error::TimeOutOfRange { t: s, horizon: f64::INFINITY });
    }
    if policy.kind == ScenarioKind::Baseline || s < policy.start_tau {
        return Ok(0.0);
    }
    let windows = if policy.kind == ScenarioKind::AdaptiveNudges { nudges.open_windows(s) } else { 0 };
    Ok(1.0 + policy.nudge_unit_cost * windows as f64)
}

/// Forward sweep of the adaptive-nudge trigger over the default grid.
pub fn compute_nudge_log(params: &ModelParams, policy: &PolicyConfig) -> Result<NudgeLog> {
    let grid = TimeGrid::default_for(params.horizon)?;
    compute_nudge_log_on(params, policy, grid)
}

pub fn compute_nudge_log_on(params: &ModelParams, policy: &PolicyConfig, grid: TimeGrid) -> Result<NudgeLog> {
    if policy.kind != ScenarioKind::AdaptiveNudges {
        return Err(Error::WrongKind { expected: "adaptive_nudges", actual: policy.kind.to_string() });
    }
    params.validate()?;
    policy.validate(params)?;
    Ok(PolicySchedule::new(params, policy, grid).nudge_log())
}
