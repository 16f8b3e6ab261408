//! Configuration, execution and file output for comparing the observers of
//! `setest-core` on the reference benchmarks.

pub mod config;
pub mod oracle;
pub mod output;
pub mod run;
pub mod serial;

pub use config::{load, ConfigFile, ConfigFileError, RunConfig};
pub use run::{run_comparison, Comparison};
