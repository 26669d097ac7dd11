//! Experiment runner for the `sciopt` solvers: flat-file configuration,
//! dataset generation, training sessions with convergence CSVs, hybrid
//! warm starts and solver comparisons.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod session;

pub use commands::{cmd_compare, cmd_gen_data, cmd_hybrid, cmd_train, CompareRow, GenDataSummary, HybridSummary, TrainSummary};
pub use config::{key_reference, ExperimentConfig, RawConfig, KEYS};
pub use error::{HarnessError, Result};
pub use session::Session;
