//! Configuration, reference presets and CSV output for the `crossdiff`
//! command-line tool.

// `!(x > 0.0)` style checks deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;

pub use config::{parse_config, render_config, RunConfig};
pub use error::CliError;
