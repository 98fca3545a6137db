//! Embedding probes: a 10-fold stratified linear-SVM accuracy protocol and a
//! validation-tuned logistic-regression ROC-AUC protocol, plus their solvers.

mod logreg;
mod metrics;
mod protocol;
mod svm;

use thiserror::Error;

use crate::baselines::BaselineError;
use crate::data::DataError;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("single-class input: {0}")]
    SingleClass(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

pub type Result<T> = std::result::Result<T, ProbeError>;

pub use logreg::{train_logreg, LogRegModel};
pub use metrics::{accuracy, roc_auc, MetricKind, MetricReport};
pub use protocol::{logreg_probe_protocol, svm_probe_protocol, LogRegProbeOutcome, ProbeFeatures};
pub use svm::{train_linear_svm, train_one_vs_rest, LinearSvmModel, OneVsRestSvm};
