//! Experiment runner: single runs, hyper-parameter sweeps and result tables
//! for streaming quantile normalization.

pub mod args;
pub mod config;
pub mod report;
pub mod run;
pub mod sweep;

pub use config::{CliError, DatasetSpec, ModelKind, NormalizerKind, RunConfig};
pub use report::{cmd_report, ReportFormat};
pub use run::{cmd_run, execute, prepare};
pub use sweep::{cmd_sweep, Grid};
