//! Experiment harness for the stochastic Manakov solvers: configuration
//! files, convergence ladders, scheme comparisons and CSV output.

pub mod config;
pub mod error;
pub mod output;
pub mod study;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};

/// Environment variable that replaces the configured output directory.
pub const OUT_DIR_ENV: &str = "MANAKOV_OUT";
