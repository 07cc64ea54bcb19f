//! Front end for the `fpme` binary: configuration, commands, CSV and SVG output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
