//! Command-line front end for `qig-core`: run configs, report schemas, POVM
//! and model-spec files, JSON and CSV emission.
//!
//! Exit codes are 0 on success, 2 for configuration errors and 3 for
//! computation errors (including a failed `verify`).

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod report;

pub use cli::run;
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use report::Report;
