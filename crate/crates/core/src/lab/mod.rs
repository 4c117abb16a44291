//! Experiment runner: JSON configs, a fixed test-function library and CSV
//! reports with one row per check.

pub mod config;
pub mod experiments;
pub mod functions;
pub mod report;

pub use config::ExperimentConfig;
pub use experiments::{run, EXPERIMENTS};
pub use report::{ExperimentReport, Row, ThresholdSource};
