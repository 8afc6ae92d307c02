//! Batch verification for `qim-core`: seeded ensembles, the check suites,
//! and JSON/CSV reports.

pub mod commands;
pub mod config;
pub mod ensemble;
pub mod report;
pub mod suites;

use std::path::PathBuf;

pub use config::{RunConfig, ALL_SUITES};
pub use ensemble::{gen_ensemble, Instance};
pub use report::{emit_report, Format, Record, Report};
pub use suites::run_suite;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "QIM_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] qim_core::Error),
}
