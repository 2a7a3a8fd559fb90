//! Run configuration: one TOML document per run.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chronic_roi::mc::DEFAULT_DELTA_SD;
use chronic_roi::scenario::{REFERENCE_COMPRESSION, REFERENCE_INFLATION};
use chronic_roi::{build_preset, DistributionSpec, PolicyConfig, ScenarioKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("malformed run config: {0}")]
    Syntax(String),
    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Compare,
    Sweep,
    Breakeven,
    MonteCarlo,
    Stress,
    ExportPlots,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressKind {
    Inflation,
    Compression,
    Both,
}

/// Figure families written by `export-plots`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotFamily {
    Severity,
    Adherence,
    Cost,
    Mc,
    Stress,
}

impl PlotFamily {
    pub const ALL: [PlotFamily; 5] =
        [PlotFamily::Severity, PlotFamily::Adherence, PlotFamily::Cost, PlotFamily::Mc, PlotFamily::Stress];

    pub fn name(self) -> &'static str {
        match self {
            PlotFamily::Severity => "severity",
            PlotFamily::Adherence => "adherence",
            PlotFamily::Cost => "cost",
            PlotFamily::Mc => "mc",
            PlotFamily::Stress => "stress",
        }
    }
}

impl fmt::Display for PlotFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlotFamily {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        PlotFamily::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            let valid: Vec<_> = PlotFamily::ALL.iter().map(|f| f.name()).collect();
            invalid("families", format!("unknown family `{s}` (valid families: {})", valid.join(", ")))
        })
    }
}

/// Distribution of the adherence gain in Monte Carlo runs. The Beta and
/// truncated-normal forms are centred on the scenario's gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GainDistribution {
    Beta {
        #[serde(default = "default_sd")]
        sd: f64,
    },
    TruncNormal {
        #[serde(default = "default_sd")]
        sd: f64,
    },
    Binary {
        delta_high: f64,
        delta_low: f64,
        p_high: f64,
    },
}

fn default_sd() -> f64 {
    DEFAULT_DELTA_SD
}

impl Default for GainDistribution {
    fn default() -> Self {
        GainDistribution::Beta { sd: DEFAULT_DELTA_SD }
    }
}

impl GainDistribution {
    pub fn name(&self) -> &'static str {
        match self {
            GainDistribution::Beta { .. } => "beta",
            GainDistribution::TruncNormal { .. } => "trunc_normal",
            GainDistribution::Binary { .. } => "binary",
        }
    }

    /// Engine distribution for a scenario with gain `mean`.
    pub fn to_spec(&self, mean: f64) -> chronic_roi::Result<DistributionSpec> {
        match *self {
            GainDistribution::Beta { sd } => DistributionSpec::beta_from_moments(mean, sd),
            GainDistribution::TruncNormal { sd } => DistributionSpec::trunc_normal(mean, sd),
            GainDistribution::Binary { delta_high, delta_low, p_high } => {
                DistributionSpec::binary(delta_high, delta_low, p_high)
            }
        }
    }
}

/// Inline scenario: a preset with field overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineScenario {
    #[serde(default = "baseline_name")]
    pub preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ScenarioKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adherence_gain_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_scale_gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nudge_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nudge_unit_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_decay: Option<f64>,
}

fn baseline_name() -> String {
    "baseline".into()
}

impl InlineScenario {
    pub fn preset(name: &str) -> Self {
        InlineScenario {
            preset: name.into(),
            label: None,
            kind: None,
            start_tau: None,
            adherence_gain_delta: None,
            cost_scale_gamma: None,
            decay_theta: None,
            nudge_threshold: None,
            nudge_unit_cost: None,
            baseline_decay: None,
        }
    }
}

/// Scenario reference: a preset name or an inline table.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ScenarioSpec {
    Preset(String),
    Inline(InlineScenario),
}

impl ScenarioSpec {
    /// File-name-safe label for outputs.
    pub fn label(&self) -> String {
        match self {
            ScenarioSpec::Preset(name) => name.clone(),
            ScenarioSpec::Inline(s) => s.label.clone().unwrap_or_else(|| format!("{}_custom", s.preset)),
        }
    }

    pub fn policy(&self) -> Result<PolicyConfig, ConfigError> {
        let preset = |name: &str| build_preset(name).map_err(|e| invalid("scenario", e.to_string()));
        let policy = match self {
            ScenarioSpec::Preset(name) => preset(name)?,
            ScenarioSpec::Inline(s) => {
                let mut p = preset(&s.preset)?;
                if let Some(v) = s.kind {
                    p.kind = v;
                }
                let fields = [
                    (s.start_tau, &mut p.start_tau),
                    (s.adherence_gain_delta, &mut p.adherence_gain_delta),
                    (s.cost_scale_gamma, &mut p.cost_scale_gamma),
                    (s.decay_theta, &mut p.decay_theta),
                    (s.nudge_threshold, &mut p.nudge_threshold),
                    (s.nudge_unit_cost, &mut p.nudge_unit_cost),
                ];
                for (value, slot) in fields {
                    if let Some(v) = value {
                        *slot = v;
                    }
                }
                if s.baseline_decay.is_some() {
                    p.baseline_decay = s.baseline_decay;
                }
                p
            }
        };
        policy.validate_fields().map_err(|e| invalid("scenario", e.to_string()))?;
        Ok(policy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    /// Empty means the reference axis.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deltas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gammas: Vec<f64>,
}

impl SweepAxes {
    /// Reference 5 x 11 design grid.
    pub fn reference() -> Self {
        SweepAxes {
            deltas: (0..5).map(|i| 0.20 + 0.05 * i as f64).collect(),
            gammas: (0..11).map(|j| 0.5 + 0.1 * j as f64).collect(),
        }
    }
}

/// Gains probed by `breakeven` when no sweep axes are given.
pub const DEFAULT_BREAKEVEN_DELTAS: [f64; 3] = [0.10, 0.15, 0.25];

/// Validated configuration for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Parameter file; the built-in reference calibration when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params_file: Option<PathBuf>,
    pub scenario: ScenarioSpec,
    pub mode: Mode,
    pub output_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_draws: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stress_kind: Option<StressKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inflation_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compression: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub families: Option<Vec<PlotFamily>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<GainDistribution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepAxes>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    params_file: Option<PathBuf>,
    scenario: toml::Value,
    mode: Mode,
    output_dir: PathBuf,
    seed: Option<u64>,
    n_draws: Option<u64>,
    workers: Option<usize>,
    stress_kind: Option<StressKind>,
    inflation_factor: Option<f64>,
    compression: Option<f64>,
    families: Option<Vec<String>>,
    distribution: Option<GainDistribution>,
    sweep: Option<SweepAxes>,
}

/// Parses and validates a run configuration document.
pub fn parse_run_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.message().to_string()))?;
    let scenario = match raw.scenario {
        toml::Value::String(name) => ScenarioSpec::Preset(name),
        toml::Value::Table(table) => ScenarioSpec::Inline(
            table.try_into().map_err(|e: toml::de::Error| invalid("scenario", e.message().to_string()))?,
        ),
        other => {
            return Err(invalid("scenario", format!("expected a preset name or a table, got {}", other.type_str())))
        }
    };
    let families = raw
        .families
        .map(|names| names.iter().map(|n| n.parse()).collect::<Result<Vec<PlotFamily>, _>>())
        .transpose()?;
    let config = RunConfig {
        params_file: raw.params_file,
        scenario,
        mode: raw.mode,
        output_dir: raw.output_dir,
        seed: raw.seed,
        n_draws: raw.n_draws,
        workers: raw.workers,
        stress_kind: raw.stress_kind,
        inflation_factor: raw.inflation_factor,
        compression: raw.compression,
        families,
        distribution: raw.distribution,
        sweep: raw.sweep,
    };
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    /// Minimal configuration for `mode` on `scenario`.
    pub fn new(mode: Mode, scenario: ScenarioSpec, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            params_file: None,
            scenario,
            mode,
            output_dir: output_dir.into(),
            seed: None,
            n_draws: None,
            workers: None,
            stress_kind: None,
            inflation_factor: None,
            compression: None,
            families: None,
            distribution: None,
            sweep: None,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let policy = self.scenario.policy()?;
        let label = self.scenario.label();
        if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(invalid("scenario.label", "use ASCII letters, digits, `_` or `-`"));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(invalid("output_dir", "must not be empty"));
        }
        if let Some(seed) = self.seed {
            if seed > i64::MAX as u64 {
                return Err(invalid("seed", format!("must be at most {}", i64::MAX)));
            }
        }
        if self.n_draws == Some(0) {
            return Err(invalid("n_draws", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        if let Some(f) = self.inflation_factor {
            if !(f.is_finite() && f >= 1.0) {
                return Err(invalid("inflation_factor", format!("must be >= 1, got {f}")));
            }
        }
        if let Some(c) = self.compression {
            if !(c > 0.0 && c <= 1.0) {
                return Err(invalid("compression", format!("must lie in (0, 1], got {c}")));
            }
        }
        if let Some(axes) = &self.sweep {
            check_axis("sweep.deltas", &axes.deltas, 0.0, 1.0)?;
            check_axis("sweep.gammas", &axes.gammas, 0.0, f64::INFINITY)?;
        }
        if let Some(families) = &self.families {
            if families.is_empty() {
                return Err(invalid("families", "must list at least one family"));
            }
        }
        if let Some(d) = &self.distribution {
            d.to_spec(policy.adherence_gain_delta).map_err(|e| invalid("distribution", e.to_string()))?;
        }
        let needs_draws = match self.mode {
            Mode::MonteCarlo => true,
            Mode::ExportPlots => self.plot_families().contains(&PlotFamily::Mc),
            _ => false,
        };
        if needs_draws {
            if self.seed.is_none() {
                return Err(invalid("seed", "required for Monte Carlo output"));
            }
            if self.n_draws.is_none() {
                return Err(invalid("n_draws", "required for Monte Carlo output"));
            }
        }
        Ok(())
    }

    pub fn plot_families(&self) -> Vec<PlotFamily> {
        self.families.clone().unwrap_or_else(|| PlotFamily::ALL.to_vec())
    }

    /// Sweep axes with unset axes taken from the reference grid.
    pub fn sweep_axes(&self) -> SweepAxes {
        let reference = SweepAxes::reference();
        let given = self.sweep.clone().unwrap_or(SweepAxes { deltas: Vec::new(), gammas: Vec::new() });
        SweepAxes {
            deltas: if given.deltas.is_empty() { reference.deltas } else { given.deltas },
            gammas: if given.gammas.is_empty() { reference.gammas } else { given.gammas },
        }
    }

    pub fn breakeven_deltas(&self) -> Vec<f64> {
        match &self.sweep {
            Some(s) if !s.deltas.is_empty() => s.deltas.clone(),
            _ => DEFAULT_BREAKEVEN_DELTAS.to_vec(),
        }
    }

    pub fn distribution(&self) -> GainDistribution {
        self.distribution.unwrap_or_default()
    }

    pub fn stress_kind(&self) -> StressKind {
        self.stress_kind.unwrap_or(StressKind::Both)
    }

    pub fn inflation_factor(&self) -> f64 {
        self.inflation_factor.unwrap_or(REFERENCE_INFLATION)
    }

    pub fn compression(&self) -> f64 {
        self.compression.unwrap_or(REFERENCE_COMPRESSION)
    }
}

fn check_axis(key: &str, axis: &[f64], lo: f64, hi: f64) -> Result<(), ConfigError> {
    if let Some(v) = axis.iter().find(|v| !(v.is_finite() && **v >= lo && **v <= hi)) {
        return Err(invalid(key, format!("value {v} outside [{lo}, {hi}]")));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(key, "must be strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_run_config(
            "params_file = \"p.toml\"\nscenario = \"baseline\"\nmode = \"simulate\"\noutput_dir = \"out\"\n",
        )
        .unwrap();
        assert_eq!(c.mode, Mode::Simulate);
        assert_eq!(c.inflation_factor(), 1.2);
        assert_eq!(c.stress_kind(), StressKind::Both);
        assert_eq!(c.sweep_axes().gammas.len(), 11);
        let p = c.scenario.policy().unwrap();
        assert_eq!((p.inflation_factor, p.progression_compression), (1.0, 1.0));
    }

    #[test]
    fn family_names_are_listed_on_error() {
        let msg = "heatmap".parse::<PlotFamily>().unwrap_err().to_string();
        for f in PlotFamily::ALL {
            assert!(msg.contains(f.name()), "{msg}");
        }
    }
}
