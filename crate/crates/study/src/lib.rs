//! Convergence studies for the Cosserat mixed schemes: mesh ladders,
//! solves in both formulations, L2 errors, observed orders and reports.

pub mod acceptance;
pub mod config;
pub mod report;
pub mod runner;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{EllCase, FormulationChoice, StudyConfig};
pub use report::{compute_orders, ConvergenceReport, ReportFormat};
pub use runner::{compute_errors, run_case, solve_level, FieldErrors, LevelResult, StudyOutcome};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] cosserat_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("{method} solve did not converge at level {level} (residual {residual:.3e} after {iterations} iterations)")]
    Solver {
        method: &'static str,
        level: usize,
        iterations: usize,
        residual: f64,
    },
}
