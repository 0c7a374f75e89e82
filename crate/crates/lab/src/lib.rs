//! Seeded experiment runner over `qlwe-core`.
//!
//! An experiment is selected by name in an [`ExperimentConfig`]; [`run`] executes it,
//! writes `result.json` and its CSV tables into the output directory, and returns the
//! [`ResultRecord`]. Tables holding hidden values are written only when
//! `emit_hidden` is set, under a `.SECRET.csv` suffix.

#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod experiments;
pub mod record;
pub mod stats;
pub mod trials;

pub use config::ExperimentConfig;
pub use experiments::{find, list_experiments, run, run_in_memory, ExperimentInfo, RunOutput, REGISTRY};
pub use record::{Outcome, ResultRecord, Table};
