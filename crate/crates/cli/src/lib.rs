//! Experiment driver: JSON configuration, runs, sweeps and reports.

pub mod config;
pub mod experiments;
pub mod table;

pub use config::{load_config, parse_config, ConfigError, Mode, RunConfig};
pub use experiments::{run_convergence, run_single, write_convergence, RunOutput, RunSummary};
pub use table::{emit_table, ConvergenceRow};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] bcfd_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Run(String),
}
