//! Configuration parsing, run orchestration and result files for the
//! chronic-care ROI engine.
//!
//! A run takes one [`RunConfig`] and writes mode-specific CSV/JSON files plus
//! a `manifest.json` (file names, row counts, SHA-256 checksums, the echoed
//! configuration and the engine version) into the output directory.

pub mod config;
pub mod format;
pub mod output;
pub mod plots;
pub mod run;

pub use config::{
    parse_run_config, ConfigError, GainDistribution, Mode, PlotFamily, RunConfig, ScenarioSpec, StressKind,
};
pub use output::{FileEntry, Manifest, MANIFEST_NAME};
pub use run::{run, RunReport};
