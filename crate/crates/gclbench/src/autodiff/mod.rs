//! Dense-tensor computation core with reverse-mode differentiation.
//!
//! A [`Tape`] records forward operations over [`Tensor`] values; replaying the
//! records in reverse yields gradients for every registered parameter.
//! [`AdamState`] applies the Adam update (with decoupled weight decay) to a
//! flat list of parameter tensors. The op set is exactly what the encoders and
//! contrastive losses in this crate need; there is no fusion or graph rewrite,
//! the tape is a flat list.

mod adam;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use tape::{BnMode, Gradients, Precision, RunningStats, Tape, TensorId};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("non-finite output of {op}")]
    NonFinite { op: &'static str },
    #[error("invalid operand in {op}: {detail}")]
    InvalidOperand { op: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, AutodiffError>;
