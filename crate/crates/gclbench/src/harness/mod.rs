//! Experiment orchestration: flat-file configuration, scaling sweeps over
//! (method, fraction, seed) grids with crash-safe persistence, Δ tables,
//! crossover estimation, log-scaling fits, and report emission.
//!
//! A sweep writes one JSON record file per grid cell under
//! `<out_dir>/records/`, so interrupted runs resume by recomputing only the
//! missing cells. [`report::write_reports`] merges the records into CSV and
//! JSON artifacts ready for any plotting tool; no figures are rendered here.

use std::path::PathBuf;

use thiserror::Error;

mod analysis;
mod configfile;
mod report;
mod sweep;

pub use analysis::{
    delta_table, estimate_crossover, fit_log_scaling, CrossoverEstimate, DeltaTable, LogFit,
};
pub use configfile::{
    apply_settings, load_dataset, parse_config, parse_dataset_ref, DatasetRef, EncoderKind,
    ExperimentConfig, MethodKind, Preset, ProbeKind,
};
pub use report::write_reports;
pub use sweep::{
    load_records, run_sweep, run_sweep_on, CellAggregate, FailedCell, RunRecord, SweepResult,
};

use crate::baselines::BaselineError;
use crate::data::DataError;
use crate::encoder::EncoderError;
use crate::gcl::GclError;
use crate::probe::ProbeError;
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("config line {line}: {detail}")]
    ConfigLine { line: usize, detail: String },
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("record file {path}: {detail}")]
    BadRecord { path: PathBuf, detail: String },
    #[error("methods {0:?} and {1:?} are not on comparable grids")]
    GridMismatch(String, String),
    #[error("analysis input: {0}")]
    BadSeries(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Gcl(#[from] GclError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
