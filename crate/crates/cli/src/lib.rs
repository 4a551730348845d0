//! Command-line front end for `hsqkd`: config parsing, loss sweeps,
//! comparisons, Monte Carlo validation and CSV/SVG output.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod report;

pub use config::ExperimentConfig;
pub use error::CliError;
