//! Simulation engine for the return on investment of adherence-enhancing
//! chronic-disease policies.
//!
//! Cumulative cost is `C(t) = C0 + integral_0^t e^{-rho s} c(s) ds` with
//! instantaneous cost
//!
//! ```text
//! c(s) = alpha D(s) + beta A(s)^2 + gamma U P(s) + lambda H(s)
//! ```
//!
//! where `D` is logistic disease severity (optionally slowed by adherence),
//! `A` the adherence trajectory of a policy archetype and `P` its expenditure
//! profile. ROI compares the policy arm with the no-policy arm at the horizon:
//! `(C_base - C_policy) / C_policy * 100`.
//!
//! Modules:
//! - [`params`], [`grid`], [`disease`], [`cost`]: the cost model.
//! - [`scenario`]: policy archetypes, nudges and stress transforms.
//! - [`roi`]: ROI, payback, break-even, sweeps and frontiers.
//! - [`mc`]: stochastic adherence gains and Monte Carlo summaries.

pub mod cost;
pub mod disease;
pub mod error;
pub mod grid;
pub mod mc;
pub mod params;
pub mod roi;
pub mod scenario;

pub use cost::{
    cumulative_cost, cumulative_cost_on, instantaneous_cost, simulate_trajectory, simulate_trajectory_on, Trajectory,
};
pub use disease::disease_severity;
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use mc::{positive_roi_rate, run_monte_carlo, sample_delta, DistributionSpec, McSummary};
pub use params::ModelParams;
pub use roi::{breakeven_gamma, frontier, monetized_roi, payback_time, roi, roi_slope, sweep_design_space, RoiGrid};
pub use scenario::{
    adherence_at, apply_stress, build_preset, compute_nudge_log, policy_cost_at, NudgeLog, PolicyConfig, ScenarioKind,
    Stress,
};

/// Version string recorded in run manifests.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
