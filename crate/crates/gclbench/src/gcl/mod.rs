//! Graph contrastive learning methods and their training loops.
//!
//! [`augment`] implements the stochastic node/edge-dropping views, [`infonce`]
//! the temperature-scaled contrastive objective over a projection head, and
//! [`infograph`] the local–global mutual-information objective with a
//! discriminator. [`train`] ties them to the encoders with Adam.

use thiserror::Error;

mod augment;
mod infograph;
mod infonce;
mod train;

pub use augment::{augment, AugmentationKind, AugmentationSpec};
pub use infograph::{
    infograph_loss, infograph_loss_on_tape, init_discriminator, DiscriminatorParams,
    InfoGraphConfig,
};
pub use infonce::{info_nce_loss, info_nce_on_tape, InfoNceConfig};
pub use train::{train_graphcl, train_infograph, TrainConfig, TrainOutcome};

use crate::autodiff::AutodiffError;
use crate::data::DataError;
use crate::encoder::EncoderError;

#[derive(Debug, Error)]
pub enum GclError {
    #[error("drop probability must lie in [0, 1], got {0}")]
    BadProbability(f64),
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("contrastive batch needs at least 2 graphs, got {0}")]
    SmallBatch(usize),
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
    #[error("training diverged at epoch {epoch}, minibatch {batch}: {detail}")]
    Diverged { epoch: usize, batch: usize, detail: String },
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Data(#[from] DataError),
}

pub type Result<T> = std::result::Result<T, GclError>;
