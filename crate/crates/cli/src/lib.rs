//! File formats, experiment sweeps and reports around `banditfit-core`.
//!
//! The core crate is `no_std`; everything that touches the filesystem,
//! threads or the clock lives here.

use std::io;
use std::path::{Path, PathBuf};

use banditfit_core::estimators::EstimatorError;
use banditfit_core::shift::ShiftError;
use banditfit_core::{DataError, FitError, SimError};
use thiserror::Error;

pub mod config;
pub mod harness;
pub mod logfile;
pub mod plot;
pub mod report;
pub mod shiftio;

pub use config::ExperimentConfig;
pub use harness::{run_cell, run_experiment, Cell, ResultRow};
pub use report::{read_results_csv, write_results_csv};

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("log line {line}: {msg}")]
    LogFormat { line: usize, msg: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Report(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Shift(#[from] ShiftError),
}

impl Error {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
