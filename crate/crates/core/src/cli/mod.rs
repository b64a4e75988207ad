//! Batch front end: JSON experiment configs, suite runs and reports.

mod config;
mod describe;
mod suite;

pub use config::{builtins, decode, ExperimentConfig, OutputSpec, Table};
pub use describe::describe;
pub use suite::{
    error_kind, plan, run_planned, run_suite, write_reports, CheckSpec, Outcome, Planned, RunOptions, SuiteReport,
};
