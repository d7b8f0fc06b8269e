/*!
Command layer for the hypercube mixing toolkit: resolved experiment
configs, their executors, and the table serialization every run emits.

The binary is a thin flag parser over this crate.  Everything a run
produces embeds its own [`ExperimentConfig`]; feeding that config back
through [`execute`] reproduces the output byte for byte, so every result
file doubles as a replay script.
*/

#![forbid(unsafe_code)]
#![warn(missing_docs)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::execute;
pub use config::{
    CommandTag, CoupleMode, ExperimentConfig, FormatTag, TGrid, ThetaSpec, VerifyLevel,
};
pub use error::{exit_code, CliError};
pub use output::{extract_config, Table};
