//! Experiment orchestration: configuration, per-cell runs, sweeps,
//! metrics files and the invariant checks behind `hyperx verify`.

pub mod config;
pub mod metrics;
pub mod runner;
pub mod summary;
pub mod sweep;
pub mod tables;
pub mod verify;

use thiserror::Error;

pub use config::{AgentConfig, ExperimentConfig, RepositionConfig};
pub use metrics::{MetricsRecord, SummaryRow, VisitationMatrix};
pub use runner::{run_cell, CellOutcome};
pub use summary::{sweep_summary, SensitivityRow};

pub use sweep::{cell_seed, run_experiment, run_single, RunFiles};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("runtime assertion failed: {0}")]
    Assertion(String),
}

impl HarnessError {
    /// Process exit code: 1 for configuration problems, 2 for everything
    /// that went wrong while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}
