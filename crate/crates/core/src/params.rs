//! The calibrated parameter vector shared by every run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference parameter file shipped with the crate.
pub const REFERENCE_PARAMS_TOML: &str = include_str!("../data/reference_params.toml");

/// Cost-model parameters.
///
/// On disk the fields use their symbolic names (`baseline_cost_C0`,
/// `discount_rate_rho`, ...). Unknown keys are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Cumulative cost at t = 0, dollars.
    #[serde(rename = "baseline_cost_C0")]
    pub baseline_cost: f64,
    /// Continuous discount rate per year.
    #[serde(rename = "discount_rate_rho")]
    pub discount_rate: f64,
    /// Logistic asymptote of disease severity, in (0, 1].
    #[serde(rename = "disease_max_Dmax")]
    pub disease_max: f64,
    /// Logistic growth rate per year.
    #[serde(rename = "disease_steepness_k")]
    pub disease_steepness: f64,
    /// Logistic inflection time, years.
    #[serde(rename = "disease_midpoint_s0")]
    pub disease_midpoint: f64,
    /// Dollars per year per unit severity.
    #[serde(rename = "disease_cost_alpha")]
    pub disease_cost: f64,
    /// Untreated adherence level.
    #[serde(rename = "adherence_baseline_A0")]
    pub adherence_baseline: f64,
    /// Dollars per year per squared adherence unit; negative values are savings.
    #[serde(rename = "adherence_cost_beta")]
    pub adherence_cost: f64,
    /// Dollars per year per health-outcome unit.
    #[serde(rename = "health_weight_lambda", default)]
    pub health_weight: f64,
    /// Strength of the adherence to progression coupling.
    #[serde(rename = "severity_coupling_eta", default)]
    pub severity_coupling: f64,
    /// Simulation horizon, years.
    #[serde(rename = "horizon_T")]
    pub horizon: f64,
    /// Dollars per year carried by one unit of `gamma * P(s)`.
    #[serde(default = "default_policy_cost_unit")]
    pub policy_cost_unit: f64,
}

fn default_policy_cost_unit() -> f64 {
    1.0
}

impl ModelParams {
    /// The pinned reference calibration.
    pub fn reference() -> Self {
        Self::from_toml_str(REFERENCE_PARAMS_TOML).expect("bundled reference parameters are valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let params: ModelParams = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("parameters serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let fields: [(&'static str, f64); 12] = [
            ("baseline_cost_C0", self.baseline_cost),
            ("discount_rate_rho", self.discount_rate),
            ("disease_max_Dmax", self.disease_max),
            ("disease_steepness_k", self.disease_steepness),
            ("disease_midpoint_s0", self.disease_midpoint),
            ("disease_cost_alpha", self.disease_cost),
            ("adherence_baseline_A0", self.adherence_baseline),
            ("adherence_cost_beta", self.adherence_cost),
            ("health_weight_lambda", self.health_weight),
            ("severity_coupling_eta", self.severity_coupling),
            ("horizon_T", self.horizon),
            ("policy_cost_unit", self.policy_cost_unit),
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
                Err(Error::InvalidParameter { name, reason: reason.to_string() })
            }
        };
        check(self.discount_rate >= 0.0, "discount_rate_rho", "must be >= 0")?;
        check(self.horizon > 0.0, "horizon_T", "must be > 0")?;
        check(self.disease_max > 0.0 && self.disease_max <= 1.0, "disease_max_Dmax", "must lie in (0, 1]")?;
        check((0.0..=1.0).contains(&self.adherence_baseline), "adherence_baseline_A0", "must lie in [0, 1]")?;
        check(self.disease_steepness > 0.0, "disease_steepness_k", "must be > 0")?;
        check(self.severity_coupling >= 0.0, "severity_coupling_eta", "must be >= 0")?;
        check(self.policy_cost_unit >= 0.0, "policy_cost_unit", "must be >= 0")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
baseline_cost_C0 = 1000.0
discount_rate_rho = 0.03
disease_max_Dmax = 0.95
disease_steepness_k = 0.5
disease_midpoint_s0 = 5.0
disease_cost_alpha = 300.0
adherence_baseline_A0 = 0.5
adherence_cost_beta = -100.0
horizon_T = 10.0
"#;

    #[test]
    fn optional_fields_default_to_zero() {
        let p = ModelParams::from_toml_str(MINIMAL).unwrap();
        assert_eq!(p.health_weight, 0.0);
        assert_eq!(p.severity_coupling, 0.0);
        assert_eq!(p.policy_cost_unit, 1.0);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = format!("{MINIMAL}\nmystery = 1.0\n");
        let err = ModelParams::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("mystery"), "{err}");
    }

    #[test]
    fn missing_required_key_is_rejected() {
        let text = MINIMAL.replace("horizon_T = 10.0\n", "");
        let err = ModelParams::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("horizon_T"), "{err}");
    }

    #[test]
    fn range_violations() {
        let bad = MINIMAL.replace("disease_max_Dmax = 0.95", "disease_max_Dmax = 1.5");
        assert!(matches!(
            ModelParams::from_toml_str(&bad),
            Err(Error::InvalidParameter { name: "disease_max_Dmax", .. })
        ));
        let bad = MINIMAL.replace("discount_rate_rho = 0.03", "discount_rate_rho = -0.01");
        assert!(ModelParams::from_toml_str(&bad).is_err());
        let bad = MINIMAL.replace("adherence_baseline_A0 = 0.5", "adherence_baseline_A0 = 1.2");
        assert!(ModelParams::from_toml_str(&bad).is_err());
        let bad = MINIMAL.replace("disease_steepness_k = 0.5", "disease_steepness_k = 0.0");
        assert!(ModelParams::from_toml_str(&bad).is_err());
    }

    #[test]
    fn reference_round_trips() {
        let p = ModelParams::reference();
        let again = ModelParams::from_toml_str(&p.to_toml_string()).unwrap();
        assert_eq!(p, again);
    }
}
