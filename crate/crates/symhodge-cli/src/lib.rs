//! Verification suites and experiment batteries behind the `symhodge` binary.

pub mod config;
pub mod manufactured;
pub mod report;
pub mod suites;

pub use config::ExperimentConfig;
pub use report::{Assertion, Report};
pub use suites::run;
