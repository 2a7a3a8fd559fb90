//! Shared fixtures for the engine benchmarks.

use chronic_roi::{build_preset, ModelParams, PolicyConfig};

/// Reference parameters and the early-adherence design.
pub fn reference_case() -> (ModelParams, PolicyConfig) {
    (ModelParams::reference(), build_preset("early_adherence").expect("preset exists"))
}

/// The reference 5 x 11 design grid.
pub fn reference_axes() -> (Vec<f64>, Vec<f64>) {
    let deltas = (0..5).map(|i| 0.20 + 0.05 * i as f64).collect();
    let gammas = (0..11).map(|j| 0.5 + 0.1 * j as f64).collect();
    (deltas, gammas)
}
