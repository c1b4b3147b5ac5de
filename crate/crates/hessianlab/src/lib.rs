//! Std layer over `hessianlab-core`: field files, TOML configuration,
//! parallel experiment orchestration and the `hessianlab` command line.

// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use experiments::{CommandOutcome, ExitStatus};
