//! Scenario runner for `biphoton-core`: unit-checked TOML scenarios, CSV and
//! SVG outputs, analysis reports and regression comparison.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod config;
pub mod error;
pub mod plot;
pub mod presets;
pub mod run;
pub mod units;

pub use config::Scenario;
pub use error::CliError;
pub use run::{run_scenario, RunSummary};

/// Environment variable that replaces the configured output directory.
pub const OUT_DIR_ENV: &str = "BIPHOTON_OUT_DIR";
