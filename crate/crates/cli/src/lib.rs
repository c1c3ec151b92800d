//! Experiment runner behind the `curvlab` binary.
//!
//! A run reads an [`ExperimentConfig`], dispatches on its kind and returns a
//! [`RunOutput`]: a [`ResultRecord`] plus any trace or grid files. The
//! [`output`] module writes these to disk.

pub mod config;
pub mod output;
pub mod run;

use thiserror::Error;

use curvlab_core::GeomError;

pub use config::{ExperimentConfig, Kind};
pub use output::{data_csv, write_outputs, DATA_CSV_HEADER};
pub use run::{run, Assertion, EstimateRow, ResultRecord, RunOptions, RunOutput};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Geom(#[from] GeomError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code: 64 for bad input, 65 for non-proper spherical
    /// data, 70 for rejection-sampling failures, 74 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 64,
            CliError::Geom(GeomError::NotProper) => 65,
            CliError::Geom(GeomError::Efficiency { .. }) => 70,
            CliError::Geom(_) => 64,
            CliError::Io { .. } => 74,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Exit code when `--assert` is set and the inequality is not confirmed.
pub const EXIT_ASSERT: i32 = 2;
