//! Command-line front end for the `haps-ris` simulator: scenario files,
//! sweeps, snapshots and the exhaustive-search oracle.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod run;

pub use config::{ScenarioFile, StrategySet};
pub use error::{exit, CliError};
pub use run::{RunOptions, SweepKind, SweepRow};
