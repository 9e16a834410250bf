//! Sampling, prediction and verification harness for the configuration
//! model, with file formats and a command-line front end.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod families;
pub mod montecarlo;
pub mod report;

pub use error::{HarnessError, Result};
pub use montecarlo::{Ensemble, Histogram};
pub use report::ExperimentReport;
