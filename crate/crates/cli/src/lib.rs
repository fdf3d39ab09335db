//! The omega-lab command-line harness: flag and config handling, command
//! dispatch, and CSV / JSON output.

pub mod config;
pub mod output;
pub mod run;

pub use config::{Args, ExperimentConfig};
pub use output::{render, Table};
pub use run::{exit_code, run_experiment};
