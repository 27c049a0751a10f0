//! Scenario runner and experiment drivers for the anti-jam processor.
//!
//! [`runner`] synthesizes a scenario, adapts weights block by block for each
//! requested method and measures the resulting C/N0. [`experiments`] holds
//! the JNR sweep, the weight-computation benchmark and the gain map.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod plot;
pub mod runner;

pub use error::{CliError, Result};

use std::path::PathBuf;

/// Directory of the scenario files shipped with the crate.
pub fn bundled_scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}
