//! Experiment runner for outage-constrained secrecy planning over parallel
//! Rayleigh channels. Each experiment resolves an [`ExperimentConfig`] and
//! returns a [`Table`] that is written as CSV.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

pub use config::{ExperimentConfig, RawConfig};
pub use experiments::{run, Experiment, Strategy};
pub use output::{format_number, Cell, Table};

#[derive(Debug, thiserror::Error)]
pub enum PlannerError {
    #[error("{source_name}{}: {}{message}", line.map(|l| format!(":{l}")).unwrap_or_default(), key.as_ref().map(|k| format!("key `{k}`: ")).unwrap_or_default())]
    Config {
        source_name: String,
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] secrecy_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}
