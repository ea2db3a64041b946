//! Command-line layer over the `deltakick` solver: configuration files,
//! single runs, parameter scans, rate fits, genericity reports and self-tests.

pub mod cli;
pub mod config;
pub mod error;
pub mod gamma;
pub mod genericity;
pub mod output;
pub mod scan;
pub mod selftest;
pub mod solve;

pub use config::RunConfig;
pub use error::CliError;
