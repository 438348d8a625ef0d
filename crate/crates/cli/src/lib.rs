//! Experiment harness around `aqcls-core`: TOML configuration, subcommands
//! that emit CSV/JSON artifacts, and an append-only store of learned
//! algorithms.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod record;

pub use commands::CliError;
pub use config::{load_config, parse_config, ExperimentConfig, Format};
pub use record::LearnedAlgorithmRecord;
